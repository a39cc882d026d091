use std::io::Read;
use std::path::Path;

use crate::data::schema::Schema;
use crate::error::{io_err, Error, Result};

/// A header plus string cells, as read from CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {i} has {} cells, header has {}",
                    row.len(),
                    header.len()
                )));
            }
        }
        Ok(Self { header, rows })
    }

    /// Builds a table from literal cells; handy in tests and examples.
    pub fn from_strs(header: &[&str], rows: &[&[&str]]) -> Result<Self> {
        Self::new(
            header.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            rows.push(record?.iter().map(str::to_string).collect());
        }
        Self::new(header, rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(io_err(path))?;
        Self::from_reader(file)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<&str>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found")))?;
        Ok(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn select_rows(&self, indices: &[usize]) -> RawTable {
        RawTable {
            header: self.header.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Reorders columns to `names`, failing on any missing column.
    pub fn project(&self, names: &[&str]) -> Result<RawTable> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Schema(format!("column `{n}` not found")))
            })
            .collect::<Result<_>>()?;
        Ok(RawTable {
            header: names.iter().map(|s| s.to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(io_err("<csv writer>"))?;
        Ok(())
    }
}

/// Feature columns in schema order plus binary labels (1 = accepted class).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: RawTable,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn from_table(table: &RawTable, schema: &Schema) -> Result<Self> {
        let names = schema.names();
        let features = table.project(&names)?;
        let labels = table
            .column(&schema.label)?
            .into_iter()
            .map(|v| u8::from(v == schema.positive))
            .collect();
        Ok(Self { features, labels })
    }

    pub fn load(path: impl AsRef<Path>, schema: &Schema) -> Result<Self> {
        Self::from_table(&RawTable::from_csv_path(path)?, schema)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_csv_and_projects() {
        let csv = "b,a,y\n1,x,yes\n2,z,no\n";
        let t = RawTable::from_reader(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        let p = t.project(&["a", "b"]).unwrap();
        assert_eq!(p.rows[1], vec!["z", "2"]);
        assert!(t.project(&["missing"]).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(RawTable::from_strs(&["a", "b"], &[&["1"]]).is_err());
    }
}
