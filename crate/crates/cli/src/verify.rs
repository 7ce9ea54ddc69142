//! Oracle checks run by `--verify` on a finished experiment.

use ordlab_core::oracle::{
    check_hybrid_phase_contract, check_structural, repetition_bound_constant,
};
use ordlab_core::BoundReport;

use crate::config::{GeneratorSpec, StrategySpec};
use crate::error::Result;
use crate::experiment::Experiment;

/// Every check that applies to the experiment's generator and strategies.
pub fn verify(exp: &Experiment) -> Result<Vec<BoundReport>> {
    let cfg = &exp.config;
    let tasks = cfg.generator.tasks();
    let mut reports = Vec::new();

    let mut structural = BoundReport::new("structural properties");
    for cell in &exp.cells {
        let c = &exp.collections[cell.repeat];
        let mut r = check_structural(c, &cell.run.state)?;
        if let Some(v) = r.first_violation.as_mut() {
            *v = format!("{} repeat {}: {v}", cell.strategy, cell.repeat);
        }
        structural.merge(r);
        if cell.strategy.single_pass() && cfg.iterations == tasks {
            let mut order = cell.run.state.order();
            order.sort_unstable();
            if order != (0..tasks).collect::<Vec<_>>() {
                structural.fail(|| {
                    format!(
                        "{} repeat {}: not every task visited once",
                        cell.strategy, cell.repeat
                    )
                });
            }
        }
    }
    reports.push(structural);

    let mut hybrid = BoundReport::new("hybrid phase contract");
    let mut any_hybrid = false;
    for cell in &exp.cells {
        if let Some(threshold) = cell.threshold {
            any_hybrid = true;
            let c = &exp.collections[cell.repeat];
            hybrid.merge(check_hybrid_phase_contract(&cell.run, threshold, c)?);
        }
    }
    if any_hybrid {
        reports.push(hybrid);
    }

    if let GeneratorSpec::RankDMinus1 { .. } = cfg.generator {
        if cfg.iterations == tasks {
            let bound = 1.0 / (std::f64::consts::E * tasks as f64);
            let mut r = BoundReport::new(format!("rank-(d-1) greedy MD loss <= 1/(eT), T={tasks}"));
            for cell in exp.cells.iter().filter(|c| c.strategy == StrategySpec::Md) {
                let loss = cell.run.rows.last().map_or(0.0, |r| r.avg_loss);
                r.record(bound - loss, || {
                    format!("repeat {}: loss {loss:e} > {bound:e}", cell.repeat)
                });
            }
            if r.instances_checked > 0 {
                reports.push(r);
            }
        }
    }

    let constant = repetition_bound_constant();
    let mut rep = BoundReport::new("greedy MD with repetition: loss <= 4e^(8/3)/3 (k+1)^(-1/3)");
    for cell in exp
        .cells
        .iter()
        .filter(|c| c.strategy == StrategySpec::MdRep)
    {
        for row in cell.run.rows.iter().filter(|r| r.iteration >= 2) {
            let bound = constant * ((row.iteration + 1) as f64).powf(-1.0 / 3.0);
            rep.record(bound - row.avg_loss, || {
                format!(
                    "repeat {} k = {}: loss {:e} > {bound:e}",
                    cell.repeat, row.iteration, row.avg_loss
                )
            });
        }
    }
    if rep.instances_checked > 0 {
        reports.push(rep);
    }

    if let GeneratorSpec::AdversarialHighDim { d } = cfg.generator {
        if cfg.iterations == tasks {
            let floor = 0.125 - 0.25 / d as f64;
            let mut r = BoundReport::new(format!("adversarial floor 1/8 - 1/(4d), d={d}"));
            for cell in exp
                .cells
                .iter()
                .filter(|c| matches!(c.strategy, StrategySpec::Md | StrategySpec::Mr))
            {
                let loss = cell.run.rows.last().map_or(0.0, |r| r.avg_loss);
                r.record(loss - floor, || {
                    format!("{}: loss {loss:e} < {floor:e}", cell.strategy)
                });
            }
            if r.instances_checked > 0 {
                reports.push(r);
            }
        }
    }

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;
    use crate::experiment::run_experiment;

    #[test]
    fn small_sweeps_verify_cleanly() {
        for text in [
            "generator=rank_dminus1\nd=6\nT=8\nstrategies=md,random-without,hybrid-md\nrepeats=3",
            "generator=isotropic\nd=20\nr=4\nT=6\nstrategies=md-rep\niterations=30\nrepeats=2",
            "generator=adversarial_highdim\nd=30\nstrategies=md,mr",
        ] {
            let cfg = Settings::parse_str(text).unwrap().build().unwrap();
            let exp = run_experiment(&cfg).unwrap();
            let reports = verify(&exp).unwrap();
            assert!(reports.len() >= 2, "{text}");
            for r in reports {
                assert!(r.passed(), "{r}");
                assert!(r.instances_checked > 0);
            }
        }
    }
}
