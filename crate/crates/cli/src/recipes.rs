//! Figure-reproduction configurations compiled into the binary.

pub const RECIPES: &[(&str, &str)] = &[
    ("fig04_gain_switch", include_str!("../recipes/fig04_gain_switch.json")),
    ("fig05_phase_randomization", include_str!("../recipes/fig05_phase_randomization.json")),
    ("fig07_injection_locking", include_str!("../recipes/fig07_injection_locking.json")),
    ("fig08_chirp", include_str!("../recipes/fig08_chirp.json")),
    ("fig11_jitter", include_str!("../recipes/fig11_jitter.json")),
    ("fig14_cw_seeding", include_str!("../recipes/fig14_cw_seeding.json")),
    ("fig16_pulsed_seeding", include_str!("../recipes/fig16_pulsed_seeding.json")),
    ("fig17_qrng", include_str!("../recipes/fig17_qrng.json")),
    ("fig18_mdpsk", include_str!("../recipes/fig18_mdpsk.json")),
    ("fig20_cow", include_str!("../recipes/fig20_cow.json")),
    ("fig20_dps", include_str!("../recipes/fig20_dps.json")),
    ("fig20_bb84", include_str!("../recipes/fig20_bb84.json")),
];

pub fn find(name: &str) -> Option<&'static str> {
    RECIPES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
