//! Observation store and the wide/long text readers that populate it.
//!
//! A dataset is a bag of `(instance, variable, value)` observations. A wide
//! table cell may be missing (no observation) or hold several values written
//! as `{a, b}` (one observation each), so an instance/variable pair carries
//! any number of observations.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VariableKind) -> Self {
        Variable {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered, uniquely named variable list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Variable>", into = "Vec<Variable>")]
pub struct Schema {
    variables: Vec<Variable>,
}

impl Schema {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Schema("schema has no variables".into()));
        }
        let mut seen = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if let Some(prev) = seen.insert(v.name.as_str(), i) {
                return Err(Error::Schema(format!(
                    "duplicate variable name {:?} (columns {} and {})",
                    v.name,
                    prev + 1,
                    i + 1
                )));
            }
        }
        Ok(Schema { variables })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn kind(&self, k: usize) -> VariableKind {
        self.variables[k].kind
    }

    pub fn name(&self, k: usize) -> &str {
        &self.variables[k].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn numeric_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VariableKind::Numeric)
            .count()
    }

    pub fn categorical_count(&self) -> usize {
        self.len() - self.numeric_count()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}

impl TryFrom<Vec<Variable>> for Schema {
    type Error = Error;

    fn try_from(value: Vec<Variable>) -> Result<Self> {
        Schema::new(value)
    }
}

impl From<Schema> for Vec<Variable> {
    fn from(s: Schema) -> Self {
        s.variables
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Numeric(f64),
    /// Index into the variable's token dictionary.
    Categorical(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub instance: u32,
    pub variable: u32,
    pub value: Value,
}

/// Immutable observation store.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    instances: Vec<String>,
    observations: Vec<Observation>,
    dictionaries: Vec<Vec<String>>,
    warnings: Vec<String>,
}

impl Dataset {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn instances(&self) -> &[String] {
        &self.instances
    }

    pub fn n_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    /// Observed tokens of a categorical variable, in order of first appearance.
    pub fn dictionary(&self, k: usize) -> &[String] {
        &self.dictionaries[k]
    }

    pub fn dictionaries(&self) -> &[Vec<String>] {
        &self.dictionaries
    }

    /// Distinct observed values `V_k` of a categorical variable.
    pub fn distinct_values(&self, k: usize) -> usize {
        self.dictionaries[k].len()
    }

    pub fn token(&self, k: usize, id: u32) -> &str {
        &self.dictionaries[k][id as usize]
    }

    pub fn token_id(&self, k: usize, token: &str) -> Option<u32> {
        self.dictionaries[k]
            .iter()
            .position(|t| t == token)
            .map(|i| i as u32)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn observations_per_variable(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.len()];
        for o in &self.observations {
            counts[o.variable as usize] += 1;
        }
        counts
    }

    pub fn observations_per_instance(&self) -> Vec<u64> {
        let mut counts = vec![0; self.instances.len()];
        for o in &self.observations {
            counts[o.instance as usize] += 1;
        }
        counts
    }

    /// Numeric values observed for variable `k`, in observation order.
    pub fn numeric_values(&self, k: usize) -> Vec<f64> {
        self.observations
            .iter()
            .filter(|o| o.variable as usize == k)
            .filter_map(|o| match o.value {
                Value::Numeric(x) => Some(x),
                Value::Categorical(_) => None,
            })
            .collect()
    }

    /// Observation count per token of categorical variable `k`.
    pub fn token_counts(&self, k: usize) -> Vec<u64> {
        let mut counts = vec![0; self.dictionaries[k].len()];
        for o in &self.observations {
            if o.variable as usize == k {
                if let Value::Categorical(t) = o.value {
                    counts[t as usize] += 1;
                }
            }
        }
        counts
    }

    /// Writes the dataset as `instance,variable,value` lines. Instances without
    /// any observation are kept as a single missing-value line.
    pub fn to_long(&self, delimiter: char, missing: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "instance{d}variable{d}value", d = delimiter);
        let mut seen = vec![false; self.instances.len()];
        for o in &self.observations {
            seen[o.instance as usize] = true;
            let k = o.variable as usize;
            let value = match o.value {
                Value::Numeric(x) => format!("{x}"),
                Value::Categorical(t) => quote_field(self.token(k, t), delimiter),
            };
            let _ = writeln!(
                out,
                "{}{d}{}{d}{}",
                quote_field(&self.instances[o.instance as usize], delimiter),
                quote_field(self.schema.name(k), delimiter),
                value,
                d = delimiter
            );
        }
        for (i, id) in self.instances.iter().enumerate() {
            if !seen[i] {
                let _ = writeln!(
                    out,
                    "{}{d}{}{d}{}",
                    quote_field(id, delimiter),
                    quote_field(self.schema.name(0), delimiter),
                    missing,
                    d = delimiter
                );
            }
        }
        out
    }
}

fn quote_field(s: &str, delimiter: char) -> String {
    if s.contains(delimiter) || s.contains('"') || s.contains('{') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Incremental constructor used by the readers and by synthetic generators.
#[derive(Debug)]
pub struct DatasetBuilder {
    schema: Schema,
    instances: Vec<String>,
    instance_index: HashMap<String, u32>,
    dictionaries: Vec<Vec<String>>,
    dictionary_index: Vec<HashMap<String, u32>>,
    observations: Vec<Observation>,
    warnings: Vec<String>,
}

impl DatasetBuilder {
    pub fn new(schema: Schema) -> Self {
        let k = schema.len();
        DatasetBuilder {
            schema,
            instances: Vec::new(),
            instance_index: HashMap::new(),
            dictionaries: vec![Vec::new(); k],
            dictionary_index: vec![HashMap::new(); k],
            observations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Registers an instance, returning its index. Re-registering returns the
    /// existing index.
    pub fn add_instance(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.instance_index.get(id) {
            return i;
        }
        let i = self.instances.len() as u32;
        self.instances.push(id.to_string());
        self.instance_index.insert(id.to_string(), i);
        i
    }

    pub fn push_numeric(&mut self, instance: u32, variable: usize, value: f64) -> Result<()> {
        self.check_target(instance, variable, VariableKind::Numeric)?;
        if !value.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite value {value} for numeric variable {:?}",
                self.schema.name(variable)
            )));
        }
        self.observations.push(Observation {
            instance,
            variable: variable as u32,
            value: Value::Numeric(value),
        });
        Ok(())
    }

    pub fn push_categorical(&mut self, instance: u32, variable: usize, token: &str) -> Result<()> {
        self.check_target(instance, variable, VariableKind::Categorical)?;
        let dict = &mut self.dictionaries[variable];
        let id = *self.dictionary_index[variable]
            .entry(token.to_string())
            .or_insert_with(|| {
                dict.push(token.to_string());
                (dict.len() - 1) as u32
            });
        self.observations.push(Observation {
            instance,
            variable: variable as u32,
            value: Value::Categorical(id),
        });
        Ok(())
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    fn check_target(&self, instance: u32, variable: usize, kind: VariableKind) -> Result<()> {
        if instance as usize >= self.instances.len() {
            return Err(Error::Domain(format!("unknown instance index {instance}")));
        }
        if variable >= self.schema.len() {
            return Err(Error::Domain(format!("unknown variable index {variable}")));
        }
        if self.schema.kind(variable) != kind {
            return Err(Error::Domain(format!(
                "variable {:?} is not {:?}",
                self.schema.name(variable),
                kind
            )));
        }
        Ok(())
    }

    pub fn build(mut self) -> Dataset {
        let counts = {
            let mut c = vec![0usize; self.schema.len()];
            for o in &self.observations {
                c[o.variable as usize] += 1;
            }
            c
        };
        for (k, &c) in counts.iter().enumerate() {
            if c == 0 && !self.instances.is_empty() {
                let msg = format!(
                    "variable {:?} has no observations and is excluded from modeling",
                    self.schema.name(k)
                );
                if !self.warnings.contains(&msg) {
                    self.warnings.push(msg);
                }
            }
        }
        Dataset {
            schema: self.schema,
            instances: self.instances,
            observations: self.observations,
            dictionaries: self.dictionaries,
            warnings: self.warnings,
        }
    }
}

/// Options for wide (one row per instance) tables.
#[derive(Clone, Debug)]
pub struct WideOptions {
    pub delimiter: char,
    pub missing: String,
    /// Header name of the instance identifier column. When absent from the
    /// header, identifiers are the 1-based row numbers.
    pub id_column: String,
}

impl Default for WideOptions {
    fn default() -> Self {
        WideOptions {
            delimiter: ',',
            missing: ".".into(),
            id_column: "#id".into(),
        }
    }
}

/// Options for long `instance,variable,value` files.
#[derive(Clone, Debug)]
pub struct LongOptions {
    pub delimiter: char,
    pub missing: String,
}

impl Default for LongOptions {
    fn default() -> Self {
        LongOptions {
            delimiter: ',',
            missing: ".".into(),
        }
    }
}

/// A schema produced by type inference plus anything worth flagging.
#[derive(Clone, Debug, PartialEq)]
pub struct InferredSchema {
    pub schema: Schema,
    pub warnings: Vec<String>,
}

/// Splits one delimited line. Delimiters inside `"..."` or `{...}` do not
/// split; surrounding quotes are removed and fields are trimmed.
pub(crate) fn split_fields(line: &str, delimiter: char) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut depth = 0usize;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    cur.push('"');
                    chars.next();
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push(c);
            }
            continue;
        }
        match c {
            '"' => in_quotes = true,
            '{' => {
                depth += 1;
                cur.push(c);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            c if c == delimiter && depth == 0 => {
                fields.push(cur.trim().to_string());
                cur.clear();
            }
            c => cur.push(c),
        }
    }
    fields.push(cur.trim().to_string());
    fields
}

/// Expands a wide cell into its value tokens (zero for a missing cell).
fn cell_tokens<'a>(cell: &'a str, missing: &str) -> Vec<&'a str> {
    if cell.is_empty() || cell == missing {
        return Vec::new();
    }
    if cell.len() >= 2 && cell.starts_with('{') && cell.ends_with('}') {
        return cell[1..cell.len() - 1]
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty() && *t != missing)
            .collect();
    }
    vec![cell]
}

fn parse_finite(token: &str) -> Option<f64> {
    token.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

struct WideLayout {
    header: Vec<String>,
    id_col: Option<usize>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_wide(text: &str, opts: &WideOptions) -> Result<WideLayout> {
    let mut lines = data_lines(text);
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::Schema("input has no header row".into()))?;
    let header = split_fields(header_line, opts.delimiter);
    let id_col = header.iter().position(|h| *h == opts.id_column);
    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let fields = split_fields(line, opts.delimiter);
        if fields.len() != header.len() {
            return Err(Error::Parse {
                row: line_no,
                column: fields.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        rows.push((line_no, fields));
    }
    Ok(WideLayout {
        header,
        id_col,
        rows,
    })
}

fn infer_columns(
    names: &[(usize, String)],
    rows: &[(usize, Vec<String>)],
    missing: &str,
) -> Result<InferredSchema> {
    let mut variables = Vec::with_capacity(names.len());
    let mut warnings = Vec::new();
    for (col, name) in names {
        let mut any = false;
        let mut numeric = true;
        for (_, fields) in rows {
            for tok in cell_tokens(&fields[*col], missing) {
                any = true;
                if parse_finite(tok).is_none() {
                    numeric = false;
                }
            }
        }
        let kind = if any && numeric {
            VariableKind::Numeric
        } else {
            if !any {
                warnings.push(format!(
                    "column {name:?} has no non-missing values; typed categorical"
                ));
            }
            VariableKind::Categorical
        };
        variables.push(Variable::new(name.clone(), kind));
    }
    Ok(InferredSchema {
        schema: Schema::new(variables)?,
        warnings,
    })
}

fn variable_columns(layout: &WideLayout) -> Vec<(usize, String)> {
    layout
        .header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != layout.id_col)
        .map(|(i, h)| (i, h.clone()))
        .collect()
}

/// Infers variable kinds from a wide table: a column is numeric iff every
/// non-missing token parses as a finite real.
pub fn infer_schema(text: &str, opts: &WideOptions) -> Result<InferredSchema> {
    let layout = read_wide(text, opts)?;
    if layout.rows.is_empty() {
        return Err(Error::Schema("cannot infer a schema from zero data rows".into()));
    }
    infer_columns(&variable_columns(&layout), &layout.rows, &opts.missing)
}

/// Reads a wide table (header row, one row per instance).
pub fn parse_wide_table(text: &str, schema: Option<&Schema>, opts: &WideOptions) -> Result<Dataset> {
    let layout = read_wide(text, opts)?;
    let columns = variable_columns(&layout);
    let (schema, warnings) = match schema {
        Some(s) => (s.clone(), Vec::new()),
        None if layout.rows.is_empty() => {
            // Nothing to type; header names still define the variables.
            let vars = columns
                .iter()
                .map(|(_, n)| Variable::new(n.clone(), VariableKind::Categorical))
                .collect();
            (Schema::new(vars)?, Vec::new())
        }
        None => {
            let inferred = infer_columns(&columns, &layout.rows, &opts.missing)?;
            (inferred.schema, inferred.warnings)
        }
    };

    // header column -> schema index
    let mut mapping = Vec::with_capacity(columns.len());
    let mut covered = vec![false; schema.len()];
    for (col, name) in &columns {
        let k = schema.index_of(name).ok_or_else(|| {
            Error::Schema(format!("header column {name:?} is not in the schema"))
        })?;
        if covered[k] {
            return Err(Error::Schema(format!("duplicate header name {name:?}")));
        }
        covered[k] = true;
        mapping.push((*col, k));
    }
    if let Some(k) = covered.iter().position(|c| !c) {
        return Err(Error::Schema(format!(
            "schema variable {:?} has no column",
            schema.name(k)
        )));
    }

    let mut builder = DatasetBuilder::new(schema);
    for w in warnings {
        builder.warn(w);
    }
    for (row_idx, (line_no, fields)) in layout.rows.iter().enumerate() {
        let id = match layout.id_col {
            Some(c) => fields[c].clone(),
            None => (row_idx + 1).to_string(),
        };
        let i = builder.add_instance(&id);
        for &(col, k) in &mapping {
            for tok in cell_tokens(&fields[col], &opts.missing) {
                match builder.schema().kind(k) {
                    VariableKind::Numeric => {
                        let x = parse_finite(tok).ok_or_else(|| Error::Parse {
                            row: *line_no,
                            column: col + 1,
                            message: format!("malformed numeric token {tok:?}"),
                        })?;
                        builder.push_numeric(i, k, x)?;
                    }
                    VariableKind::Categorical => builder.push_categorical(i, k, tok)?,
                }
            }
        }
    }
    Ok(builder.build())
}

/// Reads `instance,variable,value` triples. An optional header line naming
/// exactly those three columns is skipped. A value equal to the missing token
/// registers the instance without adding an observation.
pub fn parse_long_observations(
    text: &str,
    schema: Option<&Schema>,
    opts: &LongOptions,
) -> Result<Dataset> {
    let mut triples = Vec::new();
    for (n, (line_no, line)) in data_lines(text).enumerate() {
        let fields = split_fields(line, opts.delimiter);
        if fields.len() != 3 {
            return Err(Error::Parse {
                row: line_no,
                column: fields.len().min(3) + 1,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let is_header = n == 0
            && fields[0].eq_ignore_ascii_case("instance")
            && fields[1].eq_ignore_ascii_case("variable")
            && fields[2].eq_ignore_ascii_case("value");
        if !is_header {
            triples.push((line_no, fields));
        }
    }

    let schema = match schema {
        Some(s) => {
            for (line_no, f) in &triples {
                if s.index_of(&f[1]).is_none() {
                    return Err(Error::Schema(format!(
                        "line {line_no}: unknown variable {:?}",
                        f[1]
                    )));
                }
            }
            s.clone()
        }
        None => {
            let mut order: Vec<String> = Vec::new();
            let mut numeric: HashMap<String, (bool, bool)> = HashMap::new();
            for (_, f) in &triples {
                let entry = numeric.entry(f[1].clone()).or_insert_with(|| {
                    order.push(f[1].clone());
                    (false, true)
                });
                if f[2] != opts.missing && !f[2].is_empty() {
                    entry.0 = true;
                    if parse_finite(&f[2]).is_none() {
                        entry.1 = false;
                    }
                }
            }
            if order.is_empty() {
                return Err(Error::Schema("cannot infer a schema from zero data rows".into()));
            }
            let vars = order
                .into_iter()
                .map(|name| {
                    let (any, num) = numeric[&name];
                    let kind = if any && num {
                        VariableKind::Numeric
                    } else {
                        VariableKind::Categorical
                    };
                    Variable::new(name, kind)
                })
                .collect();
            Schema::new(vars)?
        }
    };

    let mut builder = DatasetBuilder::new(schema);
    for (line_no, f) in &triples {
        let i = builder.add_instance(&f[0]);
        if f[2] == opts.missing || f[2].is_empty() {
            continue;
        }
        let k = builder.schema().index_of(&f[1]).expect("checked above");
        match builder.schema().kind(k) {
            VariableKind::Numeric => {
                let x = parse_finite(&f[2]).ok_or_else(|| Error::Parse {
                    row: *line_no,
                    column: 3,
                    message: format!("malformed numeric token {:?}", f[2]),
                })?;
                builder.push_numeric(i, k, x)?;
            }
            VariableKind::Categorical => builder.push_categorical(i, k, &f[2])?,
        }
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PAPER_EXAMPLE: &str = "\
#id\tX1\tX2\tX3\tX4\tX5
i1\t0\t-1\t.\t{b, a}\tA
i2\t3\t{0.2, 1, 0}\t0\tb\tB
i3\t2\t.\t5\t{a, c}\tA
i4\t.\t1\t22\tc\tC
";

    fn tsv() -> WideOptions {
        WideOptions {
            delimiter: '\t',
            ..WideOptions::default()
        }
    }

    #[test]
    fn paper_example_counts() {
        let ds = parse_wide_table(PAPER_EXAMPLE, None, &tsv()).unwrap();
        assert_eq!(ds.n_instances(), 4);
        assert_eq!(ds.schema().numeric_count(), 3);
        assert_eq!(ds.schema().categorical_count(), 2);
        assert_eq!(ds.n_observations(), 21);
        assert_eq!(ds.distinct_values(3), 3);
        assert_eq!(ds.distinct_values(4), 3);
        assert_eq!(ds.instances()[1], "i2");
    }

    #[test]
    fn header_only_table_is_empty() {
        let ds = parse_wide_table("a,b,c\n", None, &WideOptions::default()).unwrap();
        assert_eq!(ds.n_instances(), 0);
        assert_eq!(ds.n_observations(), 0);
    }

    #[test]
    fn missing_cell_yields_no_observation() {
        let schema = Schema::new(vec![
            Variable::new("x", VariableKind::Numeric),
            Variable::new("y", VariableKind::Numeric),
            Variable::new("z", VariableKind::Categorical),
        ])
        .unwrap();
        let ds = parse_wide_table("#id,x,y,z\ni1, 0, ., a\n", Some(&schema), &WideOptions::default())
            .unwrap();
        assert_eq!(ds.n_observations(), 2);
    }

    #[test]
    fn malformed_numeric_reports_location() {
        let schema = Schema::new(vec![Variable::new("x", VariableKind::Numeric)]).unwrap();
        let err = parse_wide_table("x\n1\nabc\n", Some(&schema), &WideOptions::default()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 1)),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn duplicate_header_is_schema_error() {
        let err = parse_wide_table("a,a\n1,2\n", None, &WideOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn infer_rules() {
        let text = "p,q,r\n1,1,.\n2.5,2,.\n.,a,.\n";
        let inferred = infer_schema(text, &WideOptions::default()).unwrap();
        assert_eq!(inferred.schema.kind(0), VariableKind::Numeric);
        assert_eq!(inferred.schema.kind(1), VariableKind::Categorical);
        assert_eq!(inferred.schema.kind(2), VariableKind::Categorical);
        assert_eq!(inferred.warnings.len(), 1);

        let ds = parse_wide_table(text, None, &WideOptions::default()).unwrap();
        assert_eq!(ds.distinct_values(2), 0);
        assert!(!ds.warnings().is_empty());
    }

    #[test]
    fn infer_needs_rows() {
        assert!(matches!(
            infer_schema("a,b\n", &WideOptions::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn non_finite_tokens_are_not_numeric() {
        let inferred = infer_schema("a\n1\ninf\n", &WideOptions::default()).unwrap();
        assert_eq!(inferred.schema.kind(0), VariableKind::Categorical);
    }

    #[test]
    fn long_counts_and_duplicates() {
        let text = "i1,X1,0.5\ni1,X1,0.7\ni2,X1,1.0\n";
        let ds = parse_long_observations(text, None, &LongOptions::default()).unwrap();
        assert_eq!(ds.n_observations(), 3);
        assert_eq!(ds.n_instances(), 2);
        let again = parse_long_observations(text, None, &LongOptions::default()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn long_unknown_variable() {
        let schema = Schema::new(vec![Variable::new("X1", VariableKind::Numeric)]).unwrap();
        let err =
            parse_long_observations("i1,X2,1\n", Some(&schema), &LongOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn long_matches_wide_example() {
        let wide = parse_wide_table(PAPER_EXAMPLE, None, &tsv()).unwrap();
        let text = wide.to_long(',', ".");
        let long = parse_long_observations(&text, Some(wide.schema()), &LongOptions::default()).unwrap();
        assert_eq!(long.n_observations(), wide.n_observations());
        assert_eq!(long.n_instances(), wide.n_instances());
        for k in 0..wide.schema().len() {
            assert_eq!(long.distinct_values(k), wide.distinct_values(k));
        }
        assert_eq!(long.observations_per_variable(), wide.observations_per_variable());
    }

    #[test]
    fn schema_json() {
        let s = Schema::from_json(r#"[{"name":"a","kind":"numeric"},{"name":"b","kind":"categorical"}]"#)
            .unwrap();
        assert_eq!(s.numeric_count(), 1);
        assert_eq!(Schema::from_json(&s.to_json()).unwrap(), s);
        assert!(Schema::from_json(r#"[{"name":"a","kind":"numeric"},{"name":"a","kind":"numeric"}]"#)
            .is_err());
    }

    #[test]
    fn split_respects_braces_and_quotes() {
        assert_eq!(
            split_fields(r#"a,{1, 2},"x,y",""#, ','),
            vec!["a", "{1, 2}", "x,y", ""]
        );
    }
}
