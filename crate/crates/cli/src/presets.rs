//! Named experiment recipes. All use base seed 42.

use crate::config::{parse_strategies, Settings, DEFAULT_SEED};
use crate::error::{HarnessError, Result};

struct Preset {
    name: &'static str,
    about: &'static str,
    generator: &'static str,
    d: Option<usize>,
    r: Option<usize>,
    tasks: Option<usize>,
    k: Option<usize>,
    strategies: &'static str,
    iterations: Option<usize>,
    repeats: usize,
}

const PRESETS: &[Preset] = &[
    Preset {
        name: "fig3a",
        about: "isotropic d=100 r=10 T=50: random vs greedy MD/MR vs min-distance",
        generator: "isotropic",
        d: Some(100),
        r: Some(10),
        tasks: Some(50),
        k: None,
        strategies: "random-without,md,mr,min-distance",
        iterations: None,
        repeats: 10,
    },
    Preset {
        name: "aniso",
        about: "anisotropic d=100 r=10 T=50: the fig3a comparison on correlated tasks",
        generator: "anisotropic",
        d: Some(100),
        r: Some(10),
        tasks: Some(50),
        k: None,
        strategies: "random-without,md,mr,min-distance",
        iterations: None,
        repeats: 10,
    },
    Preset {
        name: "fig_rep",
        about: "isotropic d=100 r=10 T=50 k=50: effect of repetition",
        generator: "isotropic",
        d: Some(100),
        r: Some(10),
        tasks: Some(50),
        k: None,
        strategies: "md,md-rep,random-without,random-with",
        iterations: Some(50),
        repeats: 10,
    },
    Preset {
        name: "fig5",
        about: "adversarial high-dimensional collection d=1000 under greedy MD",
        generator: "adversarial_highdim",
        d: Some(1000),
        r: None,
        tasks: None,
        k: None,
        strategies: "md",
        iterations: None,
        repeats: 1,
    },
    Preset {
        name: "fig6",
        about: "isotropic d=100 r=10 T=50: hybrid MD against greedy MD and random",
        generator: "isotropic",
        d: Some(100),
        r: Some(10),
        tasks: Some(50),
        k: None,
        strategies: "md,random-without,hybrid-md",
        iterations: None,
        repeats: 10,
    },
    Preset {
        name: "adversarial3d",
        about: "three-dimensional adversarial collection K=1000 (T=3999) under greedy MD/MR",
        generator: "adversarial3d",
        d: None,
        r: None,
        tasks: None,
        k: Some(1000),
        strategies: "md,mr",
        iterations: None,
        repeats: 1,
    },
    Preset {
        name: "rank_dminus1",
        about: "rank-(d-1) tasks d=10 T=20: greedy MD against random",
        generator: "rank_dminus1",
        d: Some(10),
        r: None,
        tasks: Some(20),
        k: None,
        strategies: "md,random-without",
        iterations: None,
        repeats: 10,
    },
];

/// `(name, description)` of every preset.
pub fn list() -> Vec<(&'static str, &'static str)> {
    PRESETS.iter().map(|p| (p.name, p.about)).collect()
}

pub fn preset(name: &str) -> Result<Settings> {
    let p = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        HarnessError::usage(format!(
            "unknown preset '{name}' (known: {})",
            known.join(", ")
        ))
    })?;
    Ok(Settings {
        name: Some(p.name.to_string()),
        generator: Some(p.generator.to_string()),
        d: p.d,
        r: p.r,
        tasks: p.tasks,
        k: p.k,
        strategies: Some(parse_strategies(p.strategies)?),
        iterations: p.iterations,
        repeats: Some(p.repeats),
        seed: Some(DEFAULT_SEED),
        ..Settings::default()
    })
}
