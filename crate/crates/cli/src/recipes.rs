//! Checked-in experiment recipes, embedded so `selftest` can replay them.

pub const RECIPES: [(&str, &str); 10] = [
    ("fig2_double_root", include_str!("../recipes/fig2_double_root.toml")),
    ("fig3_roots_above", include_str!("../recipes/fig3_roots_above.toml")),
    ("fig4_roots_below", include_str!("../recipes/fig4_roots_below.toml")),
    ("fig5_optimal", include_str!("../recipes/fig5_optimal.toml")),
    ("fig6_near_optimal", include_str!("../recipes/fig6_near_optimal.toml")),
    ("fig7_zeros_ones", include_str!("../recipes/fig7_zeros_ones.toml")),
    ("fig8_ones", include_str!("../recipes/fig8_ones.toml")),
    ("fig9_lyapunov", include_str!("../recipes/fig9_lyapunov.toml")),
    ("adaptive", include_str!("../recipes/adaptive.toml")),
    ("compare", include_str!("../recipes/compare.toml")),
];
