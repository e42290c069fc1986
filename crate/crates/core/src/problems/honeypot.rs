use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::instance::{Instance, Labels};

pub const DEFENSES: [&str; 8] = [
    "e_ab",
    "e_ac",
    "e_ad",
    "e_bd",
    "e_be",
    "e_cd",
    "e_de",
    "no-allocation",
];
pub const ATTACKS: [&str; 6] = ["a", "b", "c", "d", "e", "no-attack"];

/// Defender reward per (defence, attack). Hard-coded; the closed-form payoff
/// does not reproduce every cell, so it is documented in `HoneypotParams` only.
pub const HONEYPOT_MEANS: [[f64; 6]; 8] = [
    [1.401, 1.669, -1.374, -3.692, -2.864, -5.0],
    [5.401, 0.331, 3.374, 0.308, 1.136, -1.0],
    [-5.265, -4.669, -2.374, 0.692, -3.864, -6.0],
    [-5.401, -0.331, -3.374, -0.308, -4.864, -7.0],
    [-1.401, 3.669, 0.626, -1.692, 2.864, -3.0],
    [-0.401, -0.669, 2.374, 4.692, 0.136, -2.0],
    [-2.401, -2.669, -0.374, 2.692, 1.864, -4.0],
    [1.599, 1.331, 3.626, 1.308, 2.136, 0.0],
];

pub const HONEYPOT_NOISE_STD: f64 = 3.0;

/// Game parameters behind the reward table, kept for reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoneypotParams {
    /// Allocation costs as published (six values for seven edges).
    pub pc: Vec<f64>,
    pub ac: f64,
    pub cap: f64,
    pub att: f64,
    /// Node importance weights for a..e.
    pub w: Vec<f64>,
    pub noise_std: f64,
    pub nodes: Vec<char>,
    pub edges: Vec<(char, char)>,
}

impl Default for HoneypotParams {
    fn default() -> Self {
        HoneypotParams {
            pc: vec![5.0, 1.0, 6.0, 7.0, 3.0, 4.0],
            ac: 4.0,
            cap: 10.0,
            att: 10.0,
            w: vec![0.2401, 0.2669, 0.0374, 0.2692, 0.1864],
            noise_std: HONEYPOT_NOISE_STD,
            nodes: vec!['a', 'b', 'c', 'd', 'e'],
            edges: vec![
                ('a', 'b'),
                ('a', 'c'),
                ('a', 'd'),
                ('b', 'd'),
                ('b', 'e'),
                ('c', 'd'),
                ('d', 'e'),
            ],
        }
    }
}

/// 8 defences × 6 attacks, top-3 per attack, noise std 3.
pub fn honeypot_instance() -> Instance {
    let inst = Instance {
        k: 8,
        q: 6,
        m: vec![3; 6],
        means: Grid::from_fn(8, 6, |i, l| HONEYPOT_MEANS[i][l]),
        stds: Grid::filled(8, 6, HONEYPOT_NOISE_STD),
        context_values: None,
        labels: Some(Labels {
            designs: DEFENSES.iter().map(|s| s.to_string()).collect(),
            contexts: ATTACKS.iter().map(|s| s.to_string()).collect(),
        }),
    };
    inst.validate()
        .expect("honeypot table has unique top-3 sets");
    inst
}
