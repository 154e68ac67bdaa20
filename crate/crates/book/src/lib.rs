//! Every chapter of the guide is included as a module so that its code
//! listings run as doc-tests. A failing doc-test names the chapter module.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/extremals.md")]
pub mod extremals {}

#[doc = include_str!("../../../book/src/growth.md")]
pub mod growth {}

#[doc = include_str!("../../../book/src/curvature.md")]
pub mod curvature {}

#[doc = include_str!("../../../book/src/heisenberg.md")]
pub mod heisenberg {}

#[doc = include_str!("../../../book/src/lq.md")]
pub mod lq {}

#[doc = include_str!("../../../book/src/contact.md")]
pub mod contact {}

#[doc = include_str!("../../../book/src/volume.md")]
pub mod volume {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
