//! The final front as a table: one row per prompt.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use mopo::types::{EvaluatedPrompt, OperatorKind, PromptId};
use mopo::Score;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub id: PromptId,
    pub text: String,
    pub scores: Vec<Score>,
    pub average: Score,
    pub pareto_rank: Option<usize>,
    pub operator_kind: OperatorKind,
    pub generation_born: u32,
}

impl ExportRow {
    fn min(&self) -> Score {
        self.scores.iter().copied().fold(Score::INFINITY, Score::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportTable {
    pub objectives: Vec<String>,
    pub rows: Vec<ExportRow>,
}

/// Row order for an export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Order {
    /// Rank ascending, average descending, id ascending.
    Rank,
    /// One objective descending.
    Objective(String),
    /// Minimum objective score descending.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Csv,
    Json,
}

fn desc(a: Score, b: Score) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

impl ExportTable {
    pub fn from_front(front: &[EvaluatedPrompt]) -> Self {
        let objectives = front.first().map(|e| e.fitness.objective_ids.clone()).unwrap_or_default();
        let rows = front
            .iter()
            .map(|e| ExportRow {
                id: e.prompt.id,
                text: e.prompt.text.clone(),
                scores: e.fitness.scores.clone(),
                average: e.fitness.mean(),
                pareto_rank: e.pareto_rank,
                operator_kind: e.prompt.operator_kind,
                generation_born: e.prompt.generation_born,
            })
            .collect();
        let mut table = ExportTable { objectives, rows };
        table.sort(&Order::Rank).expect("rank order needs no objective");
        table
    }

    /// Reorders rows; an unknown objective name is an error.
    pub fn sort(&mut self, order: &Order) -> Result<(), String> {
        match order {
            Order::Rank => self.rows.sort_by(|a, b| {
                a.pareto_rank
                    .unwrap_or(usize::MAX)
                    .cmp(&b.pareto_rank.unwrap_or(usize::MAX))
                    .then_with(|| desc(a.average, b.average))
                    .then_with(|| a.id.cmp(&b.id))
            }),
            Order::Objective(name) => {
                let j = self
                    .objectives
                    .iter()
                    .position(|o| o == name)
                    .ok_or_else(|| format!("unknown objective {name:?}; known: {}", self.objectives.join(", ")))?;
                self.rows.sort_by(|a, b| desc(a.scores[j], b.scores[j]).then_with(|| a.id.cmp(&b.id)));
            }
            Order::Balanced => self.rows.sort_by(|a, b| desc(a.min(), b.min()).then_with(|| a.id.cmp(&b.id))),
        }
        Ok(())
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        let delimiter = match format {
            Format::Json => {
                let json = serde_json::to_string_pretty(self).expect("table serializes");
                return writeln!(out, "{json}");
            }
            Format::Tsv => b'\t',
            Format::Csv => b',',
        };
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["id".to_string(), "text".to_string()];
        header.extend(self.objectives.iter().cloned());
        header.extend(["average", "pareto_rank", "operator_kind", "generation_born"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut record = vec![r.id.to_string(), r.text.clone()];
            record.extend(r.scores.iter().map(|s| s.to_string()));
            record.push(r.average.to_string());
            record.push(r.pareto_rank.map_or(String::new(), |k| k.to_string()));
            record.push(r.operator_kind.to_string());
            record.push(r.generation_born.to_string());
            w.write_record(&record)?;
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mopo::types::{ObjectiveVector, Prompt, PromptLayer};

    fn entry(i: usize, scores: [f64; 2], rank: usize) -> EvaluatedPrompt {
        EvaluatedPrompt {
            prompt: Prompt::seed(0, PromptLayer::Layer1, i, format!("prompt {i}, \"quoted\" <em>")),
            fitness: ObjectiveVector::new(vec!["o1".into(), "o2".into()], scores.to_vec()),
            per_emotion: vec![],
            samples: vec![],
            pareto_rank: Some(rank),
            crowding: None,
        }
    }

    fn table() -> ExportTable {
        ExportTable::from_front(&[entry(0, [0.99, 0.5], 0), entry(1, [0.8, 0.8], 0), entry(2, [0.9, 0.9], 1)])
    }

    #[test]
    fn default_order_is_rank_then_average() {
        let t = table();
        let order: Vec<Score> = t.rows.iter().map(|r| r.average).collect();
        assert_eq!(order, vec![0.8, 0.745, 0.9]);
    }

    #[test]
    fn balanced_puts_the_even_prompt_first() {
        let mut t = ExportTable::from_front(&[entry(0, [0.99, 0.5], 0), entry(1, [0.8, 0.8], 0)]);
        t.sort(&Order::Balanced).unwrap();
        assert_eq!(t.rows[0].scores, vec![0.8, 0.8]);
    }

    #[test]
    fn objective_order() {
        let mut t = table();
        t.sort(&Order::Objective("o1".into())).unwrap();
        assert_eq!(t.rows[0].scores[0], 0.99);
        assert!(t.sort(&Order::Objective("nope".into())).is_err());
    }

    #[test]
    fn csv_quotes_and_uses_lf() {
        let mut buf = Vec::new();
        table().write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("id,text,o1,o2,average,pareto_rank,operator_kind,generation_born\n"));
        assert!(text.contains("\"prompt 1, \"\"quoted\"\" <em>\""));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn json_round_trips() {
        let t = table();
        let mut buf = Vec::new();
        t.write(Format::Json, &mut buf).unwrap();
        let back: ExportTable = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, t);
    }
}
