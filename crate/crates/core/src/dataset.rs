//! Choice datasets `{p_t}` indexed by time point and menu, and their JSON
//! file format.
//!
//! ```json
//! {"universe": ["a", "b"], "deadlines": [1.0],
//!  "tables": [{"t": 0, "menu": ["a", "b"], "probs": {"a": 0.5, "b": 0.5}},
//!             {"t": 1.0, "menu": ["a", "b"], "counts": {"a": 70, "b": 30}}]}
//! ```
//!
//! `t = 0` is the literal number 0. A file either uses `probs` everywhere
//! (exact data) or `counts` everywhere (empirical data). An optional
//! `"ordered": false` marks the deadlines as an unordered index set.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::choice::{ChoiceDistribution, Menu, TimeGrid, TimePoint, Universe};
use crate::error::{Error, Result};

/// Tolerance on the per-table probability sum accepted when loading files.
pub const FILE_SUM_TOL: f64 = 1e-9;

/// Probabilities at or below this floor are treated as zero before logs.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatasetKind {
    Exact,
    /// Frequencies derived from counts; `min_count` is the smallest table
    /// sample size and drives the `c/√n` tolerance bands.
    Empirical { min_count: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDataset {
    universe: Universe,
    grid: TimeGrid,
    tables: BTreeMap<(TimePoint, Menu), ChoiceDistribution>,
    counts: Option<BTreeMap<(TimePoint, Menu), Vec<u64>>>,
}

impl ChoiceDataset {
    pub fn exact(universe: Universe, grid: TimeGrid) -> Self {
        ChoiceDataset {
            universe,
            grid,
            tables: BTreeMap::new(),
            counts: None,
        }
    }

    pub fn empirical(universe: Universe, grid: TimeGrid) -> Self {
        ChoiceDataset {
            counts: Some(BTreeMap::new()),
            ..Self::exact(universe, grid)
        }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> DatasetKind {
        match &self.counts {
            None => DatasetKind::Exact,
            Some(c) => DatasetKind::Empirical {
                min_count: c.values().map(|v| v.iter().sum::<u64>()).min().unwrap_or(0),
            },
        }
    }

    pub fn insert(&mut self, t: TimePoint, dist: ChoiceDistribution) -> Result<()> {
        if self.counts.is_some() {
            return Err(Error::invalid("empirical datasets take counts, not probabilities"));
        }
        self.check_key(t, dist.menu())?;
        self.tables.insert((t, dist.menu().clone()), dist);
        Ok(())
    }

    pub fn insert_counts(&mut self, t: TimePoint, menu: Menu, counts: Vec<u64>) -> Result<()> {
        self.check_key(t, &menu)?;
        let store = self
            .counts
            .as_mut()
            .ok_or_else(|| Error::invalid("exact datasets take probabilities, not counts"))?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("a count table needs at least one observation"));
        }
        let dist =
            ChoiceDistribution::from_weights(menu.clone(), counts.iter().map(|&c| c as f64).collect())?;
        store.insert((t, menu.clone()), counts);
        self.tables.insert((t, menu), dist);
        Ok(())
    }

    fn check_key(&self, t: TimePoint, menu: &Menu) -> Result<()> {
        self.grid.check(t)?;
        if menu.members().iter().any(|&a| a >= self.universe.len()) {
            return Err(Error::invalid("menu outside the universe"));
        }
        Ok(())
    }

    pub fn table(&self, t: TimePoint, menu: &Menu) -> Result<&ChoiceDistribution> {
        self.tables
            .get(&(t, menu.clone()))
            .ok_or_else(|| Error::MissingTable {
                t: self.grid.value(t),
                menu: menu.members().to_vec(),
            })
    }

    pub fn counts(&self, t: TimePoint, menu: &Menu) -> Option<&[u64]> {
        self.counts.as_ref()?.get(&(t, menu.clone())).map(Vec::as_slice)
    }

    /// Binary probability `p_t(a, b)` of choosing `a` from `{a, b}`.
    pub fn binary(&self, t: TimePoint, a: usize, b: usize) -> Result<f64> {
        self.table(t, &Menu::pair(a, b))?.prob(a)
    }

    /// Log-odds `ℓ_t(a, b) = ln p_t(a,b)/p_t(b,a)`; fails on degenerate odds.
    pub fn log_odds(&self, t: TimePoint, a: usize, b: usize) -> Result<f64> {
        let table = self.table(t, &Menu::pair(a, b))?;
        let pa = table.prob(a)?;
        let pb = table.prob(b)?;
        if pa <= POSITIVITY_FLOOR || pb <= POSITIVITY_FLOOR {
            return Err(Error::DegenerateOdds {
                t: self.grid.value(t),
                a,
                b,
                p: pa,
            });
        }
        Ok(pa.ln() - pb.ln())
    }

    pub fn tables(&self) -> impl Iterator<Item = (TimePoint, &ChoiceDistribution)> {
        self.tables.iter().map(|((t, _), d)| (*t, d))
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Menus with more than two members present at `t`.
    pub fn large_menus(&self, t: TimePoint) -> impl Iterator<Item = &ChoiceDistribution> {
        self.tables
            .iter()
            .filter(move |((s, m), _)| *s == t && m.len() > 2)
            .map(|(_, d)| d)
    }

    /// Fails with the first missing binary table, scanning `T₀` in order.
    pub fn require_binary(&self) -> Result<()> {
        let n = self.universe.len();
        for t in self.grid.points() {
            for a in 0..n {
                for b in a + 1..n {
                    self.table(t, &Menu::pair(a, b))?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let label = |a: usize| Value::String(self.universe.label(a).to_owned());
        let tables: Vec<Value> = self
            .tables
            .iter()
            .map(|((t, menu), dist)| {
                let mut entry = Map::new();
                entry.insert("t".into(), time_json(self.grid.value(*t)));
                entry.insert("menu".into(), menu.members().iter().map(|&a| label(a)).collect());
                let mut values = Map::new();
                match self.counts(*t, menu) {
                    Some(counts) => {
                        for (&a, &c) in menu.members().iter().zip(counts) {
                            values.insert(self.universe.label(a).to_owned(), json!(c));
                        }
                        entry.insert("counts".into(), Value::Object(values));
                    }
                    None => {
                        for (a, p) in dist.iter() {
                            values.insert(self.universe.label(a).to_owned(), json!(p));
                        }
                        entry.insert("probs".into(), Value::Object(values));
                    }
                }
                Value::Object(entry)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("universe".into(), self.universe.labels().iter().cloned().collect());
        doc.insert("deadlines".into(), json!(self.grid.deadlines()));
        if !self.grid.is_ordered() {
            doc.insert("ordered".into(), json!(false));
        }
        doc.insert("tables".into(), Value::Array(tables));
        Value::Object(doc)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| {
            Error::schema(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        Self::from_json(&value)
    }

    /// Schema-validating parser; errors carry JSON pointer paths.
    pub fn from_json(doc: &Value) -> Result<Self> {
        let obj = doc.as_object().ok_or_else(|| Error::schema("", "expected an object"))?;
        let labels = field(obj, "", "universe")?
            .as_array()
            .ok_or_else(|| Error::schema("/universe", "expected an array of labels"))?
            .iter()
            .enumerate()
            .map(|(i, v)| label_of(v, &format!("/universe/{i}")))
            .collect::<Result<Vec<_>>>()?;
        let universe =
            Universe::new(labels).map_err(|e| Error::schema("/universe", e.to_string()))?;
        let deadlines = field(obj, "", "deadlines")?
            .as_array()
            .ok_or_else(|| Error::schema("/deadlines", "expected an array of numbers"))?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_f64()
                    .ok_or_else(|| Error::schema(format!("/deadlines/{i}"), "expected a number"))
            })
            .collect::<Result<Vec<_>>>()?;
        let ordered = match obj.get("ordered") {
            None => true,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| Error::schema("/ordered", "expected a boolean"))?,
        };
        let grid = if ordered {
            TimeGrid::new(deadlines)
        } else {
            TimeGrid::unordered(deadlines)
        }
        .map_err(|e| Error::schema("/deadlines", e.to_string()))?;

        let tables = field(obj, "", "tables")?
            .as_array()
            .ok_or_else(|| Error::schema("/tables", "expected an array"))?;
        let empirical = tables
            .first()
            .and_then(Value::as_object)
            .is_some_and(|t| t.contains_key("counts"));
        let mut data = if empirical {
            ChoiceDataset::empirical(universe, grid)
        } else {
            ChoiceDataset::exact(universe, grid)
        };

        for (i, table) in tables.iter().enumerate() {
            let path = format!("/tables/{i}");
            let entry = table
                .as_object()
                .ok_or_else(|| Error::schema(&path, "expected an object"))?;
            let t_value = field(entry, &path, "t")?
                .as_f64()
                .ok_or_else(|| Error::schema(format!("{path}/t"), "expected a number"))?;
            let t = data
                .grid
                .point(t_value)
                .map_err(|_| Error::schema(format!("{path}/t"), format!("{t_value} is neither 0 nor a listed deadline")))?;
            let members = field(entry, &path, "menu")?
                .as_array()
                .ok_or_else(|| Error::schema(format!("{path}/menu"), "expected an array"))?
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let p = format!("{path}/menu/{j}");
                    let l = label_of(v, &p)?;
                    data.universe
                        .index_of(&l)
                        .ok_or_else(|| Error::schema(p, format!("unknown label {l:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let menu = Menu::new(members, data.universe.len())
                .map_err(|e| Error::schema(format!("{path}/menu"), e.to_string()))?;
            let key = if empirical { "counts" } else { "probs" };
            let other = if empirical { "probs" } else { "counts" };
            if entry.contains_key(other) {
                return Err(Error::schema(
                    format!("{path}/{other}"),
                    format!("file mixes \"probs\" and \"counts\" tables; expected \"{key}\""),
                ));
            }
            let values = field(entry, &path, key)?
                .as_object()
                .ok_or_else(|| Error::schema(format!("{path}/{key}"), "expected an object"))?;
            for label in values.keys() {
                let inside = data.universe.index_of(label).is_some_and(|a| menu.contains(a));
                if !inside {
                    return Err(Error::schema(
                        format!("{path}/{key}/{label}"),
                        "label is not a member of this table's menu",
                    ));
                }
            }
            let mut raw = Vec::with_capacity(menu.len());
            for &a in menu.members() {
                let label = data.universe.label(a);
                raw.push(values.get(label).ok_or_else(|| {
                    Error::schema(format!("{path}/{key}"), format!("missing entry for {label:?}"))
                })?);
            }
            if empirical {
                let counts = raw
                    .iter()
                    .zip(menu.members())
                    .map(|(v, &a)| {
                        v.as_u64().ok_or_else(|| {
                            Error::schema(
                                format!("{path}/counts/{}", data.universe.label(a)),
                                "expected a nonnegative integer",
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                data.insert_counts(t, menu, counts)
                    .map_err(|e| Error::schema(&path, e.to_string()))?;
            } else {
                let probs = raw
                    .iter()
                    .zip(menu.members())
                    .map(|(v, &a)| {
                        v.as_f64().filter(|p| (0.0..=1.0).contains(p)).ok_or_else(|| {
                            Error::schema(
                                format!("{path}/probs/{}", data.universe.label(a)),
                                "expected a probability in [0, 1]",
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > FILE_SUM_TOL {
                    return Err(Error::schema(
                        format!("{path}/probs"),
                        format!("table {i} probabilities sum to {total}, not 1"),
                    ));
                }
                let dist = if (total - 1.0).abs() > crate::choice::NORMALIZATION_TOL {
                    ChoiceDistribution::from_weights(menu, probs)?
                } else {
                    ChoiceDistribution::new(menu, probs)?
                };
                data.insert(t, dist)?;
            }
        }
        Ok(data)
    }
}

fn time_json(t: f64) -> Value {
    if t == 0.0 {
        json!(0)
    } else {
        json!(t)
    }
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(format!("{path}/{key}"), "missing field"))
}

fn label_of(v: &Value, path: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_u64() || n.is_i64() => Ok(n.to_string()),
        _ => Err(Error::schema(path, "labels must be strings or integers")),
    }
}
