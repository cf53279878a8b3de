//! Minimal ARFF reader: `@relation`, `@attribute` (numeric or nominal),
//! `@data` with dense comma-separated rows and `?` for missing cells.

use super::ckd::{canonical_name, ckd_schema};
use super::{
    ColumnKind, ColumnSchema, Dataset, DatasetSchema, IngestError, ParseReport, RowBuilder,
    TargetSchema,
};

enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

struct Attribute {
    name: String,
    ty: AttrType,
    line: usize,
}

/// Strict parse: the first rejected row aborts.
pub fn parse_arff(bytes: &[u8]) -> Result<Dataset, IngestError> {
    let report = parse_arff_lenient(bytes)?;
    match report.rejected.into_iter().next() {
        Some(err) => Err(err),
        None => Ok(report.dataset),
    }
}

/// Parse, collecting row-level errors instead of stopping at them.
/// `data_rows_seen == dataset.n_rows() + rejected.len()` always holds.
pub fn parse_arff_lenient(bytes: &[u8]) -> Result<ParseReport, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::Utf8)?;
    let mut attributes = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut saw_data = false;
    for (line_no, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            continue;
        } else if lower.starts_with("@attribute") {
            attributes.push(parse_attribute(&line["@attribute".len()..], line_no)?);
        } else if lower.starts_with("@data") {
            saw_data = true;
            break;
        } else {
            return Err(IngestError::Schema {
                line: line_no,
                message: format!("unexpected header line '{line}'"),
            });
        }
    }
    if !saw_data {
        return Err(IngestError::Schema { line: text.lines().count(), message: "missing @data section".into() });
    }
    let (schema, target_pos) = build_schema(attributes)?;
    let expected = schema.columns.len() + 1;
    let mut builder = RowBuilder::new(schema);
    let mut rejected = Vec::new();
    let mut row = 0usize;
    for (line_no, raw) in lines {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.trim_start().starts_with('%') {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').map(unquote).collect();
        // The public file has a few rows with one stray empty field (",," or a
        // trailing comma); drop it when that restores the declared arity.
        if fields.len() == expected + 1 {
            let empties: Vec<usize> =
                (0..fields.len()).filter(|&i| fields[i].trim().is_empty()).collect();
            if empties.len() == 1 {
                fields.remove(empties[0]);
            }
        }
        let result = if fields.len() != expected {
            Err(IngestError::Arity { row, line: line_no, expected, found: fields.len() })
        } else {
            let target = fields.remove(target_pos);
            builder.push(row, &fields, target)
        };
        if let Err(e) = result {
            rejected.push(e);
        }
        row += 1;
    }
    Ok(ParseReport { dataset: builder.finish()?, rejected, data_rows_seen: row })
}

fn unquote(token: &str) -> &str {
    let t = token.trim();
    if t.len() >= 2
        && ((t.starts_with('\'') && t.ends_with('\'')) || (t.starts_with('"') && t.ends_with('"')))
    {
        &t[1..t.len() - 1]
    } else {
        token
    }
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute, IngestError> {
    let rest = rest.trim();
    let err = |message: String| IngestError::Schema { line, message };
    let (name, after) = if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let end = rest[1..].find(q).ok_or_else(|| err("unterminated attribute name".into()))?;
        (&rest[1..1 + end], &rest[end + 2..])
    } else {
        let end = rest.find(char::is_whitespace).ok_or_else(|| err("attribute without type".into()))?;
        (&rest[..end], &rest[end..])
    };
    let ty_text = after.trim();
    let ty = if ty_text.starts_with('{') {
        let close = ty_text.find('}').ok_or_else(|| err("unterminated nominal list".into()))?;
        let labels: Vec<String> = ty_text[1..close]
            .split(',')
            .map(|l| unquote(l).trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        if labels.is_empty() {
            return Err(err(format!("attribute '{name}' has an empty category list")));
        }
        AttrType::Nominal(labels)
    } else {
        match ty_text.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttrType::Numeric,
            other => return Err(err(format!("unsupported attribute type '{other}' for '{name}'"))),
        }
    };
    Ok(Attribute { name: name.trim().to_lowercase(), ty, line })
}

fn build_schema(attributes: Vec<Attribute>) -> Result<(DatasetSchema, usize), IngestError> {
    if attributes.len() < 2 {
        return Err(IngestError::Schema { line: 1, message: "need at least one feature and a target attribute".into() });
    }
    let target_pos = attributes
        .iter()
        .position(|a| a.name == "class")
        .unwrap_or(attributes.len() - 1);
    let reference = ckd_schema();
    let mut columns = Vec::with_capacity(attributes.len() - 1);
    let mut target = None;
    for (i, attr) in attributes.into_iter().enumerate() {
        let name = canonical_name(&attr.name).to_string();
        if i == target_pos {
            let AttrType::Nominal(labels) = attr.ty else {
                return Err(IngestError::Schema { line: attr.line, message: format!("target '{name}' must be nominal") });
            };
            if labels.len() != 2 {
                return Err(IngestError::Schema { line: attr.line, message: format!("target '{name}' must have exactly 2 classes") });
            }
            let rt = &reference.target;
            let (positive, negative) = if labels.contains(&rt.positive) && labels.contains(&rt.negative) {
                (rt.positive.clone(), rt.negative.clone())
            } else {
                (labels[0].clone(), labels[1].clone())
            };
            target = Some(TargetSchema { name, positive, negative });
            continue;
        }
        let column = match (reference.columns.iter().find(|c| c.name == name), attr.ty) {
            (Some(r), AttrType::Numeric) if r.kind == ColumnKind::Numeric => r.clone(),
            (Some(r), AttrType::Nominal(labels)) if r.kind != ColumnKind::Numeric => {
                let mut a = labels.clone();
                let mut b = r.categories.clone();
                a.sort();
                b.sort();
                if a != b {
                    return Err(IngestError::Schema {
                        line: attr.line,
                        message: format!("categories of '{name}' do not match the reference schema"),
                    });
                }
                r.clone()
            }
            (Some(_), _) => {
                return Err(IngestError::Schema {
                    line: attr.line,
                    message: format!("type of '{name}' does not match the reference schema"),
                })
            }
            (None, AttrType::Numeric) => ColumnSchema::numeric(&name, ""),
            (None, AttrType::Nominal(labels)) => generic_categorical(&name, labels),
        };
        columns.push(column);
    }
    let target = target.expect("target position is always visited");
    Ok((DatasetSchema { columns, target }, target_pos))
}

/// Numeric-looking label sets become ordinal (sorted by value); others stay nominal.
fn generic_categorical(name: &str, labels: Vec<String>) -> ColumnSchema {
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    match numeric {
        Some(values) => {
            let mut pairs: Vec<(f64, String)> = values.into_iter().zip(labels).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            ColumnSchema {
                name: name.to_string(),
                kind: ColumnKind::Ordinal,
                categories: pairs.into_iter().map(|p| p.1).collect(),
                units: String::new(),
            }
        }
        None => ColumnSchema {
            name: name.to_string(),
            kind: ColumnKind::Nominal,
            categories: labels,
            units: String::new(),
        },
    }
}
