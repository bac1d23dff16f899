use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Axis, JointPmf, Role};

/// Column layout of a table: one role-tagged alphabet per attribute.
///
/// On disk: `{"attributes": [{"name": "zip", "role": "public", "labels": [...]}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<Axis>,
}

impl Schema {
    pub fn new(attributes: Vec<Axis>) -> Result<Self> {
        let s = Schema { attributes };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::invalid("schema has no attributes"));
        }
        for (i, a) in self.attributes.iter().enumerate() {
            if self.attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::invalid(format!("duplicate attribute {:?}", a.name)));
            }
            if a.alphabet.labels().iter().any(|l| l.contains(',')) {
                return Err(Error::invalid(format!(
                    "labels of {:?} may not contain commas",
                    a.name
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Schema = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Columns whose role satisfies `pred`, in schema order.
    pub fn columns_where(&self, pred: impl Fn(Role) -> bool) -> Vec<usize> {
        (0..self.attributes.len())
            .filter(|&i| pred(self.attributes[i].role))
            .collect()
    }

    /// Private and public columns: the encoder's view of a row.
    pub fn encoder_columns(&self) -> Vec<usize> {
        self.columns_where(|r| r.is_private() || r.is_public())
    }

    pub fn product_size(&self, cols: &[usize]) -> usize {
        cols.iter().map(|&c| self.attributes[c].size()).product()
    }
}

/// Categorical table of symbol indices, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    cells: Vec<usize>,
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Vec<usize>>) -> Result<Self> {
        schema.validate()?;
        let k = schema.len();
        let mut cells = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Csv {
                    row: i + 1,
                    column: String::new(),
                    message: format!("expected {k} fields, found {}", row.len()),
                });
            }
            for (a, &v) in schema.attributes.iter().zip(row) {
                if v >= a.size() {
                    return Err(Error::Csv {
                        row: i + 1,
                        column: a.name.clone(),
                        message: format!("index {v} outside alphabet of size {}", a.size()),
                    });
                }
            }
            cells.extend_from_slice(row);
        }
        Table::from_cells(schema, cells)
    }

    pub(crate) fn from_cells(schema: Schema, cells: Vec<usize>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::invalid("table has no rows"));
        }
        debug_assert_eq!(cells.len() % schema.len(), 0);
        Ok(Table { schema, cells })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len() / self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        let k = self.schema.len();
        &self.cells[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.schema.len())
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows().map(move |r| r[c])
    }

    /// Flat index of row `i` in the product alphabet of `cols` (row-major).
    pub fn index_of(&self, i: usize, cols: &[usize]) -> usize {
        let row = self.row(i);
        cols.iter()
            .fold(0, |acc, &c| acc * self.schema.attributes[c].size() + row[c])
    }

    /// Write with a header row and symbol labels.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.schema.attributes.iter().map(|a| a.name.as_str()))?;
        for row in self.rows() {
            out.write_record(
                self.schema
                    .attributes
                    .iter()
                    .zip(row)
                    .map(|(a, &v)| a.alphabet.label(v)),
            )?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| with_path(e, path))
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Read a headed CSV file into a table. Columns are matched to the schema by
/// name, so their order in the file is free.
pub fn ingest_csv(path: &Path, schema: &Schema) -> Result<Table> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, schema).map_err(|e| with_path(e, path))
}

/// Like [`ingest_csv`] on any reader. Errors name the 1-based data row
/// (the header is not counted) and the column.
pub fn read_csv<R: Read>(r: R, schema: &Schema) -> Result<Table> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let header = rdr.headers()?.clone();
    let k = schema.len();
    // file column -> schema column
    let mut slot = vec![usize::MAX; header.len()];
    for (j, name) in header.iter().enumerate() {
        match schema.position(name) {
            Some(c) if !slot.contains(&c) => slot[j] = c,
            Some(_) => {
                return Err(Error::Csv {
                    row: 0,
                    column: name.to_string(),
                    message: "duplicate header".into(),
                })
            }
            None => {
                return Err(Error::Csv {
                    row: 0,
                    column: name.to_string(),
                    message: "header not in schema".into(),
                })
            }
        }
    }
    if let Some(a) = schema
        .attributes
        .iter()
        .enumerate()
        .find(|(c, _)| !slot.contains(c))
    {
        return Err(Error::Csv {
            row: 0,
            column: a.1.name.clone(),
            message: "schema attribute missing from header".into(),
        });
    }

    let mut cells = Vec::new();
    let mut row = vec![0usize; k];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Csv {
                row: i + 1,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            let a = &schema.attributes[slot[j]];
            row[slot[j]] = a.alphabet.index_of(field).ok_or_else(|| Error::Csv {
                row: i + 1,
                column: a.name.clone(),
                message: format!("unknown symbol {field:?}"),
            })?;
        }
        cells.extend_from_slice(&row);
    }
    if cells.is_empty() {
        return Err(Error::invalid("CSV has no data rows"));
    }
    Table::from_cells(schema.clone(), cells)
}

/// Relative frequencies over all columns, axes in schema order.
pub fn empirical_joint(t: &Table) -> Result<JointPmf> {
    let cols: Vec<usize> = (0..t.schema.len()).collect();
    let mut counts = vec![0u64; t.schema.product_size(&cols)];
    for i in 0..t.n_rows() {
        counts[t.index_of(i, &cols)] += 1;
    }
    let n = t.n_rows() as f64;
    JointPmf::new(
        t.schema.attributes.clone(),
        counts.into_iter().map(|c| c as f64 / n).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    fn schema() -> Schema {
        Schema::new(vec![
            Axis::new(
                "age",
                Role::Private,
                Alphabet::new(["young", "old"]).unwrap(),
            ),
            Axis::new("zip", Role::Public, Alphabet::new(["a", "b", "c"]).unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn reads_valid_rows() {
        let text = "age,zip\nyoung,a\nold,c\nold,b\nyoung,a\n";
        let t = read_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(t.n_rows(), 4);
        assert_eq!(t.row(1), &[1, 2]);
        assert_eq!(t.column(1).collect::<Vec<_>>(), vec![0, 2, 1, 0]);
    }

    #[test]
    fn header_order_is_free() {
        let text = "zip,age\nb,old\n";
        let t = read_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(t.row(0), &[1, 1]);
    }

    #[test]
    fn unknown_symbol_names_row_and_column() {
        let text = "age,zip\nyoung,a\nold,c\nold,q\n";
        match read_csv(text.as_bytes(), &schema()) {
            Err(Error::Csv { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "zip");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(read_csv("age,zip\n".as_bytes(), &schema()).is_err());
        assert!(matches!(
            read_csv("age,zip\nold,a,x\n".as_bytes(), &schema()),
            Err(Error::Csv { row: 1, .. })
        ));
        assert!(read_csv("age\nold\n".as_bytes(), &schema()).is_err());
        assert!(read_csv("age,zip,extra\nold,a,1\n".as_bytes(), &schema()).is_err());
    }

    #[test]
    fn empirical_frequencies() {
        let t = Table::new(schema(), vec![vec![0, 1]; 5]).unwrap();
        let j = empirical_joint(&t).unwrap();
        assert_eq!(j.probs()[1], 1.0);
        assert_eq!(j.probs().iter().sum::<f64>(), 1.0);

        let s = Schema::new(vec![Axis::new(
            "x",
            Role::Both,
            Alphabet::indexed(2).unwrap(),
        )])
        .unwrap();
        let t = Table::new(s, vec![vec![0], vec![1], vec![1], vec![0]]).unwrap();
        assert_eq!(empirical_joint(&t).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn csv_round_trip() {
        let t = Table::new(schema(), vec![vec![0, 2], vec![1, 0]]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "age,zip\nyoung,c\nold,a\n"
        );
        assert_eq!(read_csv(buf.as_slice(), &schema()).unwrap(), t);
    }

    #[test]
    fn schema_checks() {
        let a = Axis::new("x", Role::Public, Alphabet::indexed(2).unwrap());
        assert!(Schema::new(vec![a.clone(), a]).is_err());
        let comma = Axis::new("y", Role::Public, Alphabet::new(["a,b", "c"]).unwrap());
        assert!(Schema::new(vec![comma]).is_err());
        assert!(Table::new(schema(), vec![vec![2, 0]]).is_err());
        assert!(Table::new(schema(), vec![]).is_err());
    }
}
