use std::fmt;
use std::str::FromStr;

/// One wire body as it crossed the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    /// e.g. `S->sp1`.
    pub direction: String,
    pub uri: String,
    pub body: String,
}

/// Line-delimited log of a run: direction, URI and body separated by tabs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn push(&mut self, from: &str, to: &str, uri: &str, body: &str) {
        self.records.push(Record {
            direction: format!("{from}->{to}"),
            uri: uri.to_string(),
            body: body.trim_end_matches('\n').to_string(),
        });
    }

    /// Records carrying encrypted messages, as opposed to key exchange.
    pub fn messages(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.uri.contains("/process"))
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{}\t{}\t{}", r.direction, r.uri, r.body)?;
        }
        Ok(())
    }
}

impl FromStr for Transcript {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut records = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let mut parts = line.splitn(3, '\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(d), Some(u), Some(b)) if !d.is_empty() && !u.is_empty() => records.push(Record {
                    direction: d.to_string(),
                    uri: u.to_string(),
                    body: b.to_string(),
                }),
                _ => return Err(format!("line {}: expected direction, URI and body", i + 1)),
            }
        }
        Ok(Transcript { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut t = Transcript::default();
        t.push("sp1", "S", "http://127.0.0.1:1/peers/sp1", "Get key");
        t.push("S", "sp1", "http://127.0.0.1:2/process?mode=st", "2, 05 0 0\n");
        let text = t.to_string();
        assert_eq!(text.lines().nth(1), Some("S->sp1\thttp://127.0.0.1:2/process?mode=st\t2, 05 0 0"));
        assert_eq!(text.parse::<Transcript>().unwrap(), t);
        assert_eq!(t.messages().count(), 1);
        assert!("a\tb".parse::<Transcript>().is_err());
    }
}
