//! Holds the `acceptance` test target; run it with
//! `cargo test -p conceptforge-acceptance --test acceptance`.
