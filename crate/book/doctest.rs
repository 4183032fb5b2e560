// mdbook cannot run Rust snippets that depend on a local crate, so every
// chapter is pulled into this crate as a module doc and `cargo test --doc`
// checks the code blocks. One module per chapter keeps failures traceable.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/corpus.md")]
pub mod corpus {}
#[doc = include_str!("src/embeddings.md")]
pub mod embeddings {}
#[doc = include_str!("src/professions.md")]
pub mod professions {}
#[doc = include_str!("src/nationalities.md")]
pub mod nationalities {}
#[doc = include_str!("src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
#[doc = include_str!("../README.md")]
pub mod readme {}
