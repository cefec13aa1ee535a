//! Built-in campaign configurations, one per table or figure.

pub const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.toml")),
    ("table2", include_str!("../presets/table2.toml")),
    ("table3", include_str!("../presets/table3.toml")),
    ("table4", include_str!("../presets/table4.toml")),
    ("table5", include_str!("../presets/table5.toml")),
    ("table6", include_str!("../presets/table6.toml")),
    ("figure2", include_str!("../presets/figure2.toml")),
    ("figure3", include_str!("../presets/figure3.toml")),
    ("meanwidth", include_str!("../presets/meanwidth.toml")),
    ("tailcheck", include_str!("../presets/tailcheck.toml")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
