use std::fmt::Write as _;

/// A CSV table with a fixed header; floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell<'a> {
    Text(&'a str),
    Num(f64),
    Int(u64),
}

pub fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        self.rows.push(
            cells
                .iter()
                .map(|c| match c {
                    Cell::Text(s) => quote(s),
                    Cell::Num(x) => format!("{x:.16e}"),
                    Cell::Int(n) => n.to_string(),
                })
                .collect(),
        );
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_and_precision() {
        let mut t = Table::new(&["name", "x", "n"]);
        t.push(&[Cell::Text("diag(1,2)"), Cell::Num(0.1), Cell::Int(3)]);
        assert_eq!(t.to_csv(), "name,x,n\n\"diag(1,2)\",1.0000000000000001e-1,3\n");
        assert_eq!(quote("a\"b,"), "\"a\"\"b,\"");
    }
}
