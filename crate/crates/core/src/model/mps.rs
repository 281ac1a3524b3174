use std::collections::HashMap;

use super::general::{GeneralLP, ObjSense, Row, RowSense};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

struct Parser {
    lp: GeneralLP,
    row_index: HashMap<String, usize>,
    var_index: HashMap<String, usize>,
    objective_row: Option<String>,
    /// Non-objective `N` rows; their entries are discarded.
    free_rows: HashMap<String, ()>,
    /// Per-variable flag set once an explicit bound fixes the lower bound.
    lower_set: Vec<bool>,
    line: usize,
}

fn err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        message: message.into(),
    }
}

/// Splits a data line at the classic fixed-format field positions.
fn fixed_fields(line: &str) -> Vec<String> {
    const SPANS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    for &(s, e) in &SPANS {
        if s >= chars.len() {
            out.push(String::new());
            continue;
        }
        let field: String = chars[s..e.min(chars.len())].iter().collect();
        out.push(field.trim().to_string());
    }
    out
}

impl Parser {
    fn parse_number(&self, s: &str) -> Result<f64, ModelError> {
        s.parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| err(self.line, format!("invalid number '{s}'")))
    }

    fn row(&self, name: &str) -> Result<RowRef, ModelError> {
        if self.objective_row.as_deref() == Some(name) {
            return Ok(RowRef::Objective);
        }
        if self.free_rows.contains_key(name) {
            return Ok(RowRef::Free);
        }
        self.row_index
            .get(name)
            .map(|&i| RowRef::Constraint(i))
            .ok_or_else(|| err(self.line, format!("unknown row '{name}'")))
    }

    fn var(&self, name: &str) -> Result<usize, ModelError> {
        self.var_index
            .get(name)
            .copied()
            .ok_or_else(|| err(self.line, format!("unknown column '{name}'")))
    }

    fn rows_line(&mut self, tok: &[&str]) -> Result<(), ModelError> {
        if tok.len() != 2 {
            return Err(err(self.line, "ROWS entry needs a type and a name"));
        }
        let name = tok[1].to_string();
        if self.row_index.contains_key(&name)
            || self.free_rows.contains_key(&name)
            || self.objective_row.as_ref() == Some(&name)
        {
            return Err(ModelError::DuplicateName(format!("row {name}")));
        }
        let sense = match tok[0].to_ascii_uppercase().as_str() {
            "N" => {
                if self.objective_row.is_none() {
                    self.objective_row = Some(name);
                } else {
                    self.free_rows.insert(name, ());
                }
                return Ok(());
            }
            "L" => RowSense::Le,
            "G" => RowSense::Ge,
            "E" => RowSense::Eq,
            other => return Err(err(self.line, format!("unknown row type '{other}'"))),
        };
        self.row_index.insert(name.clone(), self.lp.rows.len());
        self.lp.rows.push(Row {
            name,
            sense,
            rhs: 0.0,
            range: None,
        });
        Ok(())
    }

    fn columns_line(&mut self, tok: &[&str]) -> Result<(), ModelError> {
        if tok
            .iter()
            .any(|t| t.trim_matches('\'').eq_ignore_ascii_case("MARKER"))
        {
            return Err(ModelError::UnsupportedSection {
                line: self.line,
                what: "integer MARKER".into(),
            });
        }
        if tok.len() != 3 && tok.len() != 5 {
            return Err(err(
                self.line,
                "COLUMNS entry needs a column and one or two (row, value) pairs",
            ));
        }
        let name = tok[0];
        let j = match self.var_index.get(name) {
            Some(&j) => {
                if j + 1 != self.lp.vars.len() {
                    return Err(err(self.line, format!("column '{name}' is not contiguous")));
                }
                j
            }
            None => {
                let j = self.lp.add_var(name, 0.0, 0.0, f64::INFINITY);
                self.var_index.insert(name.to_string(), j);
                self.lower_set.push(false);
                j
            }
        };
        for pair in tok[1..].chunks(2) {
            let v = self.parse_number(pair[1])?;
            match self.row(pair[0])? {
                RowRef::Objective => self.lp.vars[j].obj += v,
                RowRef::Free => {}
                RowRef::Constraint(i) => self.lp.entries.push((i, j, v)),
            }
        }
        Ok(())
    }

    /// RHS and RANGES share a layout: optional set name, then pairs.
    fn pairs<'a>(&self, tok: &'a [&'a str], what: &str) -> Result<&'a [&'a str], ModelError> {
        match tok.len() {
            2 | 4 => Ok(tok),
            3 | 5 => Ok(&tok[1..]),
            _ => Err(err(self.line, format!("malformed {what} entry"))),
        }
    }

    fn rhs_line(&mut self, tok: &[&str]) -> Result<(), ModelError> {
        let pairs = self.pairs(tok, "RHS")?;
        for pair in pairs.chunks(2) {
            let v = self.parse_number(pair[1])?;
            match self.row(pair[0])? {
                RowRef::Objective => self.lp.obj_constant = -v,
                RowRef::Free => {}
                RowRef::Constraint(i) => self.lp.rows[i].rhs = v,
            }
        }
        Ok(())
    }

    fn ranges_line(&mut self, tok: &[&str]) -> Result<(), ModelError> {
        let pairs = self.pairs(tok, "RANGES")?;
        for pair in pairs.chunks(2) {
            let v = self.parse_number(pair[1])?;
            match self.row(pair[0])? {
                RowRef::Constraint(i) => self.lp.rows[i].range = Some(v),
                _ => return Err(err(self.line, "RANGES on a free row")),
            }
        }
        Ok(())
    }

    fn bounds_line(&mut self, tok: &[&str]) -> Result<(), ModelError> {
        if tok.is_empty() {
            return Err(err(self.line, "empty BOUNDS entry"));
        }
        let kind = tok[0].to_ascii_uppercase();
        let needs_value = match kind.as_str() {
            "UP" | "LO" | "FX" => true,
            "FR" | "MI" | "PL" => false,
            "BV" | "LI" | "UI" | "SC" => {
                return Err(ModelError::UnsupportedSection {
                    line: self.line,
                    what: format!("integer bound type {kind}"),
                })
            }
            other => return Err(err(self.line, format!("unknown bound type '{other}'"))),
        };
        let base = if needs_value { 3 } else { 2 };
        let rest = match tok.len() {
            n if n == base => &tok[1..],
            n if n == base + 1 => &tok[2..],
            _ => return Err(err(self.line, format!("malformed {kind} bound"))),
        };
        let j = self.var(rest[0])?;
        let value = if needs_value {
            Some(self.parse_number(rest[1])?)
        } else {
            None
        };
        let v = &mut self.lp.vars[j];
        match (kind.as_str(), value) {
            ("UP", Some(u)) => {
                v.hi = u;
                if u < 0.0 && !self.lower_set[j] && v.lo == 0.0 {
                    v.lo = f64::NEG_INFINITY;
                }
            }
            ("LO", Some(l)) => {
                v.lo = l;
                self.lower_set[j] = true;
            }
            ("FX", Some(x)) => {
                v.lo = x;
                v.hi = x;
                self.lower_set[j] = true;
            }
            ("FR", None) => {
                v.lo = f64::NEG_INFINITY;
                v.hi = f64::INFINITY;
                self.lower_set[j] = true;
            }
            ("MI", None) => {
                v.lo = f64::NEG_INFINITY;
                self.lower_set[j] = true;
            }
            ("PL", None) => v.hi = f64::INFINITY,
            _ => unreachable!(),
        }
        Ok(())
    }
}

enum RowRef {
    Objective,
    Free,
    Constraint(usize),
}

/// Parses fixed or free MPS text.
///
/// Fields are whitespace-separated. A data line whose token count matches no
/// valid layout is re-split at the fixed-format column positions, which
/// admits names containing spaces. Integer markers and integer bound types
/// are rejected with [`ModelError::UnsupportedSection`].
pub fn parse_mps(text: &str) -> Result<GeneralLP, ModelError> {
    let mut p = Parser {
        lp: GeneralLP::new(ObjSense::Min),
        row_index: HashMap::new(),
        var_index: HashMap::new(),
        objective_row: None,
        free_rows: HashMap::new(),
        lower_set: Vec::new(),
        line: 0,
    };
    let mut section = Section::None;
    for (k, raw) in text.lines().enumerate() {
        p.line = k + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        if section == Section::End {
            return Err(err(p.line, "data after ENDATA"));
        }
        let header = !line.starts_with(' ') && !line.starts_with('\t');
        if header {
            let mut tok = line.split_whitespace();
            let word = tok.next().unwrap_or("").to_ascii_uppercase();
            section = match word.as_str() {
                "NAME" => {
                    p.lp.name = tok.collect::<Vec<_>>().join(" ");
                    Section::Name
                }
                "OBJSENSE" | "OBJSENCE" => {
                    if let Some(s) = tok.next() {
                        set_sense(&mut p, s)?;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                "SOS" | "QUADOBJ" | "QMATRIX" | "QSECTION" | "QCMATRIX" | "CSECTION"
                | "INDICATORS" => {
                    return Err(ModelError::UnsupportedSection {
                        line: p.line,
                        what: word,
                    })
                }
                _ => return Err(err(p.line, format!("unknown section '{word}'"))),
            };
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let result = dispatch(&mut p, section, &tokens);
        match result {
            Err(ModelError::Parse { .. })
                if matches!(
                    section,
                    Section::Rows
                        | Section::Columns
                        | Section::Rhs
                        | Section::Ranges
                        | Section::Bounds
                ) =>
            {
                let fields = fixed_fields(line);
                let fixed = fixed_tokens(section, &fields);
                match fixed {
                    Some(t)
                        if t.len() != tokens.len()
                            || t.iter().zip(&tokens).any(|(a, b)| a != b) =>
                    {
                        let refs: Vec<&str> = t.iter().map(String::as_str).collect();
                        dispatch(&mut p, section, &refs).or(result)?;
                    }
                    _ => result?,
                }
            }
            other => other?,
        }
    }
    if section != Section::End {
        return Err(err(p.line, "missing ENDATA"));
    }
    if p.objective_row.is_none() {
        return Err(err(p.line, "no objective row"));
    }
    Ok(p.lp)
}

fn set_sense(p: &mut Parser, s: &str) -> Result<(), ModelError> {
    p.lp.sense = match s.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" => ObjSense::Min,
        "MAX" | "MAXIMIZE" => ObjSense::Max,
        other => return Err(err(p.line, format!("unknown objective sense '{other}'"))),
    };
    Ok(())
}

fn dispatch(p: &mut Parser, section: Section, tok: &[&str]) -> Result<(), ModelError> {
    match section {
        Section::ObjSense => set_sense(p, tok.first().copied().unwrap_or("")),
        Section::Rows => p.rows_line(tok),
        Section::Columns => p.columns_line(tok),
        Section::Rhs => p.rhs_line(tok),
        Section::Ranges => p.ranges_line(tok),
        Section::Bounds => p.bounds_line(tok),
        Section::None | Section::Name | Section::End => {
            Err(err(p.line, "data line outside a section"))
        }
    }
}

/// Non-empty fixed-format fields in section order; `None` if a gap appears.
fn fixed_tokens(section: Section, fields: &[String]) -> Option<Vec<String>> {
    let take: &[usize] = match section {
        Section::Rows => &[0, 1],
        Section::Bounds => &[0, 1, 2, 3],
        _ => &[1, 2, 3, 4, 5],
    };
    let mut out = Vec::new();
    let mut ended = false;
    for &f in take {
        let v = &fields[f];
        if v.is_empty() {
            // An empty RHS/RANGES/BOUNDS set name is allowed.
            if f == 1 && matches!(section, Section::Rhs | Section::Ranges | Section::Bounds) {
                continue;
            }
            ended = true;
        } else if ended {
            return None;
        } else {
            out.push(v.clone());
        }
    }
    Some(out)
}
