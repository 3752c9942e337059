//! The `run` and `exact` subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use metavqe::circuit::GeneratorSet;
use metavqe::workflows::{
    exact_energies, run_protocol_with_exact, Algorithm, AnsatzSpec, ErrorSummary, Protocol, ProtocolOutput,
};
use metavqe::{HamiltonianFamily, TrainingGrid};
use serde_json::json;

use crate::config::{AnsatzKind, ExperimentConfig, Model, Task, FULL_QUBITS};
use crate::Failure;

/// Inputs resolved from a validated config and its files.
pub struct Experiment {
    pub family: HamiltonianFamily,
    pub protocol: Protocol,
}

fn read(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {what} {}: {e}", path.display())))
}

/// Loads input files and builds the protocol. Problems here are config errors.
pub fn resolve(config: &ExperimentConfig, full: bool) -> Result<Experiment, Failure> {
    config.validate(full).map_err(Failure::Usage)?;
    let usage = |e: metavqe::Error| Failure::Usage(e.to_string());
    let (family, symbol, constants) = match config.model {
        Model::Xxz => {
            let n = config.n.unwrap_or(if full { FULL_QUBITS } else { 8 });
            let family = HamiltonianFamily::xxz(n).map_err(usage)?;
            (family, "delta".to_string(), vec![("field".to_string(), config.field)])
        }
        Model::File => {
            let path = config.hamiltonian.as_ref().expect("validated");
            let family = HamiltonianFamily::parse(&read(path, "Hamiltonian file")?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            if let Some(n) = config.n {
                if n != family.nqubits() {
                    return Err(Failure::Usage(format!(
                        "n = {n} but {} has {} qubits",
                        path.display(),
                        family.nqubits()
                    )));
                }
            }
            let names: Vec<String> = family.parameter_names().iter().map(|s| s.to_string()).collect();
            let symbol = match &config.sweep {
                Some(s) => s.clone(),
                None if names.len() == 1 => names[0].clone(),
                None => {
                    return Err(Failure::Usage(format!(
                        "{} has parameters {names:?}; choose one with `sweep`",
                        path.display()
                    )))
                }
            };
            if !names.contains(&symbol) {
                return Err(Failure::Usage(format!("`{symbol}` is not a parameter of {}", path.display())));
            }
            for name in &names {
                if *name != symbol && !config.fixed.iter().any(|(f, _)| f == name) {
                    return Err(Failure::Usage(format!("parameter `{name}` needs a value in `fixed`")));
                }
            }
            for (f, _) in &config.fixed {
                if !names.contains(f) {
                    return Err(Failure::Usage(format!("`fixed` names unknown parameter `{f}`")));
                }
            }
            (family, symbol, config.fixed.clone())
        }
    };
    let n = family.nqubits();
    if n > crate::config::CI_QUBIT_LIMIT && !full {
        return Err(Failure::Usage(format!("the model has {n} qubits; pass --full for large runs")));
    }
    let ansatz = match config.ansatz {
        AnsatzKind::Layered => {
            if n < 2 {
                return Err(Failure::Usage("the layered ansatz needs at least 2 qubits".into()));
            }
            AnsatzSpec::Layered {
                l1: config.l1,
                l2: config.l2,
            }
        }
        AnsatzKind::Ucc => {
            let path = config.generators.as_ref().expect("validated");
            let generators = GeneratorSet::parse(&read(path, "generator file")?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            if generators.nqubits != n {
                return Err(Failure::Usage(format!(
                    "{} is for {} qubits, the model has {n}",
                    path.display(),
                    generators.nqubits
                )));
            }
            AnsatzSpec::Ucc {
                generators,
                repetitions: config.repetitions,
                share_across_repetitions: config.share_repetitions,
            }
        }
    };
    let grid = |count| {
        TrainingGrid::equispaced(symbol.clone(), config.meta_start, config.meta_stop, count, constants.clone())
            .map_err(usage)
    };
    let protocol = Protocol {
        train: grid(config.train_points)?,
        test: grid(config.test_points)?,
        ansatz,
        encoding: config.encoding,
        train_init: config.train_init(),
        algorithms: config.algorithms(),
        vqe_seeds: config.vqe_seeds(),
        restarts: config.restarts,
        optimizer: config.optimizer(),
    };
    Ok(Experiment { family, protocol })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn exact_csv(points: &[f64], exact: &[f64]) -> String {
    let mut out = String::from("meta_value,exact\n");
    for (p, e) in points.iter().zip(exact) {
        out.push_str(&format!("{p:.11e},{e:.11e}\n"));
    }
    out
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn summary(config: &ExperimentConfig, ex: &Experiment, stages: &[ProtocolOutput], error: Option<&str>) -> String {
    let mut algorithms = Vec::new();
    for out in stages {
        for (a, p) in &out.profiles {
            algorithms.push(ErrorSummary::of(a.name(), p));
        }
    }
    algorithms.sort_by(|a, b| a.algorithm.cmp(&b.algorithm));
    let params = stages.first().map(|o| (o.meta_params, o.plain_params));
    let value = json!({
        "timestamp": timestamp(),
        "n": ex.family.nqubits(),
        "L1": config.l1,
        "L2": config.l2,
        "sweep": ex.protocol.test.symbol,
        "train_points": ex.protocol.train.len(),
        "test_points": ex.protocol.test.len(),
        "meta_params": params.map(|p| p.0),
        "plain_params": params.map(|p| p.1),
        "algorithms": algorithms,
        "error": error,
    });
    serde_json::to_string_pretty(&value).expect("summary serializes") + "\n"
}

fn write_stage(dir: &Path, out: &ProtocolOutput) -> Result<(), Failure> {
    for (a, p) in &out.profiles {
        write(dir, &format!("profile_{}.csv", a.name()), &p.to_csv())?;
    }
    for (a, t) in &out.training {
        let json = t.to_json().map_err(|e| Failure::Runtime(e.to_string()))?;
        write(dir, &format!("train_{}.json", a.name()), &(json + "\n"))?;
        write(dir, &format!("trace_{}.csv", a.name()), &t.trace.to_csv())?;
    }
    Ok(())
}

/// Algorithm groups run one after another so that finished groups keep
/// their artifacts if a later one fails.
fn stages(algorithms: &[Algorithm]) -> Vec<Vec<Algorithm>> {
    let groups = [
        vec![Algorithm::Meta, Algorithm::OptMeta],
        vec![Algorithm::Ga, Algorithm::OptGa],
        vec![Algorithm::Vqe],
    ];
    groups
        .into_iter()
        .map(|g| g.into_iter().filter(|a| algorithms.contains(a)).collect::<Vec<_>>())
        .filter(|g| !g.is_empty())
        .collect()
}

pub fn cmd_run(config: &ExperimentConfig, full: bool) -> Result<(), Failure> {
    let ex = resolve(config, full)?;
    let dir = config.output_dir();
    fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    write(&dir, "config.txt", &config.to_text())?;

    let test = &ex.protocol.test;
    eprintln!(
        "metavqe: n={} sweep `{}` over {} test points, algorithms {:?}",
        ex.family.nqubits(),
        test.symbol,
        test.len(),
        config.algorithms.iter().map(|t| t.name()).collect::<Vec<_>>()
    );
    let runtime = |e: metavqe::Error| Failure::Runtime(e.to_string());
    let exact = exact_energies(&ex.family, test).map_err(runtime)?;
    write(&dir, "exact.csv", &exact_csv(&test.points, &exact))?;

    let mut done = Vec::new();
    for group in stages(&ex.protocol.algorithms) {
        let protocol = Protocol {
            algorithms: group.clone(),
            ..ex.protocol.clone()
        };
        eprintln!("metavqe: running {:?}", group.iter().map(|a| a.name()).collect::<Vec<_>>());
        match run_protocol_with_exact(&ex.family, &protocol, exact.clone()) {
            Ok(out) => {
                write_stage(&dir, &out)?;
                done.push(out);
            }
            Err(e) => {
                let msg = e.to_string();
                write(&dir, "summary.json", &summary(config, &ex, &done, Some(&msg)))?;
                return Err(Failure::Runtime(msg));
            }
        }
    }
    let path = write(&dir, "summary.json", &summary(config, &ex, &done, None))?;
    eprintln!("metavqe: wrote artifacts to {}", path.parent().unwrap_or(&dir).display());
    Ok(())
}

/// Prints `(meta_value, exact)` pairs and writes `exact.csv`.
pub fn cmd_exact(config: &ExperimentConfig, full: bool) -> Result<(), Failure> {
    let mut config = config.clone();
    config.algorithms = vec![Task::Exact];
    let ex = resolve(&config, full)?;
    let test = &ex.protocol.test;
    let exact = exact_energies(&ex.family, test).map_err(|e| Failure::Runtime(e.to_string()))?;
    let csv = exact_csv(&test.points, &exact);
    print!("{csv}");
    let dir = config.output_dir();
    fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    write(&dir, "exact.csv", &csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_grouping() {
        assert_eq!(
            stages(&Algorithm::ALL),
            vec![
                vec![Algorithm::Meta, Algorithm::OptMeta],
                vec![Algorithm::Ga, Algorithm::OptGa],
                vec![Algorithm::Vqe]
            ]
        );
        assert_eq!(stages(&[Algorithm::OptGa]), vec![vec![Algorithm::OptGa]]);
        assert!(stages(&[]).is_empty());
    }

    #[test]
    fn exact_csv_format() {
        assert_eq!(exact_csv(&[-1.0], &[-2.5]), "meta_value,exact\n-1.00000000000e0,-2.50000000000e0\n");
    }

    #[test]
    fn xxz_resolves_with_defaults() {
        let ex = resolve(&ExperimentConfig::default(), false).unwrap();
        assert_eq!(ex.family.nqubits(), 8);
        assert_eq!(ex.protocol.train.len(), 20);
        assert_eq!(ex.protocol.test.points[99], 1.1);
        let ex = resolve(&ExperimentConfig::default(), true).unwrap();
        assert_eq!(ex.family.nqubits(), 14);
    }
}
