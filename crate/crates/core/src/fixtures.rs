//! Designs, netlists and observation files shipped with the crate.

pub const COUNTER_CORRECT: &str = include_str!("../../../fixtures/counter/counter-correct.vhd");
/// `NQ1 <= not(Q1)` on line 30 lost its `not`.
pub const COUNTER_BUG30: &str = include_str!("../../../fixtures/counter/counter-bug30.vhd");
/// The first `or` on line 13 became an `and`.
pub const COUNTER_BUG13: &str = include_str!("../../../fixtures/counter/counter-bug13.vhd");

pub const INSTANT_BUG30_OBS: &str = include_str!("../../../fixtures/counter/instant-bug30.toml");
pub const TEMPORAL_BUG13_STIMULUS: &str =
    include_str!("../../../fixtures/counter/temporal-bug13.toml");
pub const COUNT_UP_STIMULUS: &str = include_str!("../../../fixtures/counter/count-up.toml");

/// Six-NAND teaching netlist.
pub const C17: &str = include_str!("../../../fixtures/c17.bench");

/// The ten ISCAS'85 circuits as `(name, .bench text)`.
pub const ISCAS85: [(&str, &str); 10] = [
    ("c432", include_str!("../../../fixtures/iscas85/c432.bench")),
    ("c499", include_str!("../../../fixtures/iscas85/c499.bench")),
    ("c880", include_str!("../../../fixtures/iscas85/c880.bench")),
    (
        "c1355",
        include_str!("../../../fixtures/iscas85/c1355.bench"),
    ),
    (
        "c1908",
        include_str!("../../../fixtures/iscas85/c1908.bench"),
    ),
    (
        "c2670",
        include_str!("../../../fixtures/iscas85/c2670.bench"),
    ),
    (
        "c3540",
        include_str!("../../../fixtures/iscas85/c3540.bench"),
    ),
    (
        "c5315",
        include_str!("../../../fixtures/iscas85/c5315.bench"),
    ),
    (
        "c6288",
        include_str!("../../../fixtures/iscas85/c6288.bench"),
    ),
    (
        "c7552",
        include_str!("../../../fixtures/iscas85/c7552.bench"),
    ),
];

pub fn iscas85(name: &str) -> Option<&'static str> {
    ISCAS85
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, t)| *t)
}
