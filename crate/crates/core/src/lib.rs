pub mod milp;
pub mod pms;
pub mod profiles;
pub mod sim;
pub mod sizing;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/milp.md")]
    mod milp {}
    #[doc = include_str!("../../../book/src/profiles.md")]
    mod profiles {}
    #[doc = include_str!("../../../book/src/sizing.md")]
    mod sizing {}
    #[doc = include_str!("../../../book/src/pms.md")]
    mod pms {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
