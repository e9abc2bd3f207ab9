//! Plain-text `field=value` reports and CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// Ordered `field=value` report. Floats are printed with fixed precision so
/// identical runs produce identical bytes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    fields: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        self.fields.push((key.to_string(), format_float(value)));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn extend(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for (k, v) in &other.fields {
            self.fields.push((format!("{prefix}{k}"), v.clone()));
        }
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.fields {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Two-line CSV: header of field names, then values.
    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
        let values: Vec<String> = self.fields.iter().map(|(_, v)| csv_escape(v)).collect();
        format!("{}\n{}\n", header.join(","), values.join(","))
    }

    pub fn write(&self, dir: &Path, stem: &str) -> io::Result<()> {
        fs::write(dir.join(format!("{stem}.txt")), self.to_text())?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv())
    }

    /// Parse text produced by [`Report::to_text`].
    pub fn parse(text: &str) -> Report {
        let fields = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Report { fields }
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.10}")
}

pub fn csv_escape(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

/// Simple CSV table builder.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.iter().map(|h| csv_escape(h)).collect::<Vec<_>>().join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.iter().map(|v| csv_escape(v)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_csv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut r = Report::new();
        r.text("task", "cluster-kmeans").float("ari", 0.5).text("k", 3);
        let parsed = Report::parse(&r.to_text());
        assert_eq!(parsed, r);
        assert_eq!(parsed.get("ari"), Some("0.5000000000"));
        assert_eq!(r.to_csv(), "task,ari,k\ncluster-kmeans,0.5000000000,3\n");
    }

    #[test]
    fn csv_quotes_commas() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",1\n");
    }
}
