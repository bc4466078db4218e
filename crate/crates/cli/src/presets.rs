//! Built-in experiment configurations, one JSON file per preset.

pub const PRESETS: &[(&str, &str)] = &[
    ("example-1423", include_str!("../presets/example-1423.json")),
    ("example-44", include_str!("../presets/example-44.json")),
    ("sum2", include_str!("../presets/sum2.json")),
    ("prod2", include_str!("../presets/prod2.json")),
    ("zero", include_str!("../presets/zero.json")),
    ("gen1423", include_str!("../presets/gen1423.json")),
    ("r1r2gen", include_str!("../presets/r1r2gen.json")),
    ("rrgen", include_str!("../presets/rrgen.json")),
    ("torus-morse-n1", include_str!("../presets/torus-morse-n1.json")),
    ("product-K-T4", include_str!("../presets/product-K-T4.json")),
    ("action-sweep", include_str!("../presets/action-sweep.json")),
    ("action-zero", include_str!("../presets/action-zero.json")),
    ("tau-compat", include_str!("../presets/tau-compat.json")),
    ("roundtrip", include_str!("../presets/roundtrip.json")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
