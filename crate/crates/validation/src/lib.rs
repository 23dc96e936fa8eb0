//! Acceptance checks for the workspace. Everything lives in
//! `tests/acceptance.rs`, which prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.
