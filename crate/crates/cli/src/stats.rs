//! Plot-ready diagnostics of a finished run, one CSV table each.

use std::io::Write;

use mopo::engine::{operator_contribution, RunResult};
use mopo::text::SLOT_2;
use mopo::types::OperatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    /// Share of P_opt produced by each operator kind, per generation and for the final front.
    Operators,
    /// Best and mean score per objective within P_opt, plus hypervolume.
    Fitness,
    Hypervolume,
    /// Credit each Layer-2 prompt received, per generation.
    Ledger,
}

impl Table {
    pub const ALL: [Table; 4] = [Table::Operators, Table::Fitness, Table::Hypervolume, Table::Ledger];

    pub fn name(self) -> &'static str {
        match self {
            Table::Operators => "operators",
            Table::Fitness => "fitness",
            Table::Hypervolume => "hypervolume",
            Table::Ledger => "ledger",
        }
    }

    pub fn parse(name: &str) -> Option<Table> {
        Table::ALL.into_iter().find(|t| t.name() == name)
    }
}

fn writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn write_table(result: &RunResult, table: Table, out: &mut dyn Write) -> csv::Result<()> {
    let mut w = writer(out);
    let objectives = result.config.objective_ids();
    match table {
        Table::Operators => {
            let contribution = operator_contribution(result);
            let mut header = vec!["generation".to_string()];
            header.extend(OperatorKind::ALL.iter().map(|k| k.to_string()));
            w.write_record(&header)?;
            let labelled = contribution
                .per_generation
                .iter()
                .enumerate()
                .map(|(g, s)| (g.to_string(), s))
                .chain(std::iter::once(("front".to_string(), &contribution.overall)));
            for (label, shares) in labelled {
                let mut row = vec![label];
                row.extend(OperatorKind::ALL.iter().map(|k| shares[k].to_string()));
                w.write_record(&row)?;
            }
        }
        Table::Fitness => {
            let mut header = vec!["generation".to_string()];
            header.extend(objectives.iter().map(|o| format!("best_{o}")));
            header.extend(objectives.iter().map(|o| format!("mean_{o}")));
            header.push("hypervolume".into());
            w.write_record(&header)?;
            for g in &result.generations {
                let mut row = vec![g.generation.to_string()];
                row.extend(g.best_scores().iter().map(|s| s.to_string()));
                row.extend(g.mean_scores().iter().map(|s| s.to_string()));
                row.push(opt(g.hypervolume()));
                w.write_record(&row)?;
            }
        }
        Table::Hypervolume => {
            w.write_record(["generation", "hypervolume"])?;
            for g in &result.generations {
                w.write_record([g.generation.to_string(), opt(g.hypervolume())])?;
            }
        }
        Table::Ledger => {
            let registry = result.registry();
            w.write_record([
                "generation",
                "pool",
                "layer2_id",
                "offspring_produced",
                "offspring_selected",
                "mean_offspring_fitness",
            ])?;
            for g in &result.generations {
                for (id, e) in &g.ledger.entries {
                    let pool = match registry.get(id) {
                        Some(p) if p.text.contains(SLOT_2) => "combine",
                        Some(_) => "paraphrase",
                        None => "unknown",
                    };
                    w.write_record([
                        g.generation.to_string(),
                        pool.to_string(),
                        id.to_string(),
                        e.offspring_produced.to_string(),
                        e.offspring_selected.to_string(),
                        e.mean_offspring_fitness.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
