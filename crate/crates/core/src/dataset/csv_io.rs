//! CSV import/export (RFC 4180 quoting, UTF-8). `?` or an empty cell is missing.

use super::{Dataset, DatasetSchema, IngestError, ParseReport, RowBuilder};

pub fn parse_csv(bytes: &[u8], schema: &DatasetSchema) -> Result<Dataset, IngestError> {
    let report = parse_csv_lenient(bytes, schema)?;
    match report.rejected.into_iter().next() {
        Some(err) => Err(err),
        None => Ok(report.dataset),
    }
}

/// Columns may appear in any order; the result follows schema order.
pub fn parse_csv_lenient(bytes: &[u8], schema: &DatasetSchema) -> Result<ParseReport, IngestError> {
    std::str::from_utf8(bytes).map_err(|_| IngestError::Utf8)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    let expected = schema.columns.len() + 1;
    if header.len() != expected {
        return Err(IngestError::Header(format!(
            "expected {expected} columns ({} features + target), found {}",
            schema.columns.len(),
            header.len()
        )));
    }
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let pos = header
            .iter()
            .position(|h| *h == col.name)
            .ok_or_else(|| IngestError::Header(format!("column '{}' not found", col.name)))?;
        positions.push(pos);
    }
    let target_pos = header
        .iter()
        .position(|h| *h == schema.target.name)
        .ok_or_else(|| IngestError::Header(format!("target column '{}' not found", schema.target.name)))?;

    let mut builder = RowBuilder::new(schema.clone());
    let mut rejected = Vec::new();
    let mut rows_seen = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        rows_seen += 1;
        let line = record.position().map_or(row + 2, |p| p.line() as usize);
        if record.len() != expected {
            rejected.push(IngestError::Arity { row, line, expected, found: record.len() });
            continue;
        }
        let tokens: Vec<&str> = positions.iter().map(|&p| &record[p]).collect();
        if let Err(e) = builder.push(row, &tokens, &record[target_pos]) {
            rejected.push(e);
        }
    }
    Ok(ParseReport { dataset: builder.finish()?, rejected, data_rows_seen: rows_seen })
}

/// Render in schema order with the target last. Numbers use the shortest
/// representation that parses back to the same value.
pub fn to_csv(ds: &Dataset) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let schema = ds.schema();
    let mut header: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
    header.push(&schema.target.name);
    writer.write_record(&header).expect("in-memory write");
    for r in 0..ds.n_rows() {
        let mut record: Vec<String> = (0..ds.n_columns()).map(|c| ds.cell_label(r, c)).collect();
        record.push(schema.target.label(ds.target()[r]).to_string());
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{canonical_arff, ckd_schema, parse_arff, Cell, ColumnKind, ColumnSchema, ColumnValues, TargetSchema};
    use proptest::prelude::*;

    #[test]
    fn csv_reexport_matches_arff_parse() {
        let ds = parse_arff(canonical_arff().as_bytes()).unwrap();
        let text = to_csv(&ds);
        let back = parse_csv(text.as_bytes(), &ckd_schema()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn reordered_columns_are_accepted() {
        let schema = small_schema();
        let text = "y,b,a\np,x,1.5\nn,?,\n";
        let ds = parse_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(ds.cell(0, 0), Cell::Number(1.5));
        assert_eq!(ds.cell(1, 0), Cell::Missing);
        assert_eq!(ds.cell(1, 1), Cell::Missing);
    }

    #[test]
    fn single_row_all_missing() {
        let schema = small_schema();
        let ds = parse_csv(b"a,b,y\n?,,p\n", &schema).unwrap();
        assert_eq!(ds.missing_mask(), vec![vec![true, true]]);
        assert_eq!(ds.target(), &[1]);
    }

    #[test]
    fn short_header_is_rejected() {
        let ds = parse_arff(canonical_arff().as_bytes()).unwrap();
        let text = to_csv(&ds);
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        // Drop the first column from the header only.
        let short = header.split_once(',').unwrap().1;
        let bad = format!("{short}\n");
        assert!(matches!(parse_csv(bad.as_bytes(), &ckd_schema()), Err(IngestError::Header(_))));
    }

    #[test]
    fn quoted_fields() {
        let schema = small_schema();
        let ds = parse_csv(b"a,b,y\n\"2\",\" x\",\"p\"\n", &schema).unwrap();
        assert_eq!(ds.cell(0, 1), Cell::Category(0));
    }

    fn small_schema() -> DatasetSchema {
        DatasetSchema {
            columns: vec![
                ColumnSchema::numeric("a", ""),
                ColumnSchema::categorical("b", ColumnKind::Nominal, &["x", "z"], ""),
            ],
            target: TargetSchema { name: "y".into(), positive: "p".into(), negative: "n".into() },
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_identity(
            rows in proptest::collection::vec(
                (proptest::option::of(-1e6f64..1e6), proptest::option::of(0u32..2), 0u8..2),
                0..40,
            )
        ) {
            let schema = small_schema();
            let a = ColumnValues::Numeric(rows.iter().map(|r| r.0).collect());
            let b = ColumnValues::Categorical(rows.iter().map(|r| r.1).collect());
            let target = rows.iter().map(|r| r.2).collect();
            let ds = Dataset::new(schema.clone(), vec![a, b], target).unwrap();
            let once = to_csv(&ds);
            let back = parse_csv(once.as_bytes(), &schema).unwrap();
            prop_assert_eq!(&back, &ds);
            prop_assert_eq!(to_csv(&back), once);
        }
    }
}
