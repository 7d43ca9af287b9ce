use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{Label, TrialRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Group,
    City,
    Provider,
}

impl GroupBy {
    pub fn label(self) -> &'static str {
        match self {
            GroupBy::Group => "group",
            GroupBy::City => "city",
            GroupBy::Provider => "provider",
        }
    }

    fn key(self, r: &TrialRecord) -> String {
        match self {
            GroupBy::Group => r.group.to_string(),
            GroupBy::City => r.city.clone(),
            GroupBy::Provider => r.provider.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryRow {
    pub key: String,
    pub count: usize,
    pub successes: usize,
}

impl SummaryRow {
    pub fn failures(&self) -> usize {
        self.count - self.successes
    }

    pub fn rate(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.successes as f64 / self.count as f64
        }
    }

    /// Success rate in percent, cut (not rounded) to one decimal, without a
    /// trailing `.0`: 104 of 120 gives `86.6%`, 28 of 40 gives `70%`.
    pub fn rate_text(&self) -> String {
        format_rate(self.successes, self.count)
    }
}

pub fn format_rate(successes: usize, count: usize) -> String {
    if count == 0 {
        return "n/a".into();
    }
    let permille = successes as u128 * 1000 / count as u128;
    let (whole, tenth) = (permille / 10, permille % 10);
    if tenth == 0 {
        format!("{whole}%")
    } else {
        format!("{whole}.{tenth}%")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryTable {
    pub by: GroupBy,
    /// Rows in order of first appearance in the records.
    pub rows: Vec<SummaryRow>,
}

pub fn summarize(records: &[TrialRecord], by: GroupBy) -> SummaryTable {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in records {
        let key = by.key(r);
        let i = match rows.iter().position(|row| row.key == key) {
            Some(i) => i,
            None => {
                rows.push(SummaryRow {
                    key,
                    count: 0,
                    successes: 0,
                });
                rows.len() - 1
            }
        };
        rows[i].count += 1;
        if r.label == Label::Success {
            rows[i].successes += 1;
        }
    }
    SummaryTable { by, rows }
}

const HEADERS: [&str; 4] = ["trials", "successes", "failures", "success rate"];

impl SummaryTable {
    pub fn total(&self) -> SummaryRow {
        SummaryRow {
            key: "total".into(),
            count: self.rows.iter().map(|r| r.count).sum(),
            successes: self.rows.iter().map(|r| r.successes).sum(),
        }
    }

    pub fn row(&self, key: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.key == key)
    }

    /// `dimension,key,trials,successes,failures,success_rate` rows, no header.
    pub fn csv_rows(&self, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.by.label(),
                csv_field(&r.key),
                r.count,
                r.successes,
                r.failures(),
                r.rate_text()
            );
        }
    }
}

pub const CSV_HEADER: &str = "dimension,key,trials,successes,failures,success_rate";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for SummaryTable {
    /// Aligned text table with a total row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total = self.total();
        let rows: Vec<[String; 5]> = self
            .rows
            .iter()
            .chain(std::iter::once(&total))
            .map(|r| {
                [
                    r.key.clone(),
                    r.count.to_string(),
                    r.successes.to_string(),
                    r.failures().to_string(),
                    r.rate_text(),
                ]
            })
            .collect();
        let mut widths = [self.by.label().chars().count(), 0, 0, 0, 0];
        for (i, h) in HEADERS.iter().enumerate() {
            widths[i + 1] = h.len();
        }
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let pad = |s: &str, w: usize, left: bool| {
            let fill = " ".repeat(w - s.chars().count());
            if left {
                format!("{s}{fill}")
            } else {
                format!("{fill}{s}")
            }
        };
        let mut header = pad(self.by.label(), widths[0], true);
        for (i, h) in HEADERS.iter().enumerate() {
            header.push_str("  ");
            header.push_str(&pad(h, widths[i + 1], false));
        }
        writeln!(f, "{}", header.trim_end())?;
        writeln!(f, "{}", "-".repeat(widths.iter().sum::<usize>() + 8))?;
        for (n, row) in rows.iter().enumerate() {
            if n == rows.len() - 1 {
                writeln!(f, "{}", "-".repeat(widths.iter().sum::<usize>() + 8))?;
            }
            let mut line = pad(&row[0], widths[0], true);
            for i in 1..5 {
                line.push_str("  ");
                line.push_str(&pad(&row[i], widths[i], false));
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
