//! Acceptance criteria for `lzx-core`, run by `cargo test -p lzx-validation --test acceptance`.
//! The criteria live in `tests/acceptance.rs`; this crate has no library code.
