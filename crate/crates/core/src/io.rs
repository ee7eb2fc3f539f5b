//! Text formats: states, digraph edge lists, trace CSV and `key = value` configs.
//!
//! State files start with a header naming the encoding and layout, one of
//! `spin <rows> <cols>`, `spin chain <N>` or `tie digraph <N>`, followed by the
//! site values in row-major order separated by any whitespace. Digraph ties are
//! listed per source node, skipping the diagonal. LF and CRLF line endings are
//! both accepted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::EstimationTrace;
use crate::state::{arc_index, BinaryState, Encoding, Layout};

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
}

fn parse_num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("expected {what}, found `{tok}`")))
}

fn parse_header(line_no: usize, line: &str) -> Result<(Encoding, Layout)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let encoding = toks
        .first()
        .and_then(|t| Encoding::parse(t))
        .ok_or_else(|| Error::parse(line_no, format!("unknown encoding in header `{line}`")))?;
    let layout = match toks.as_slice() {
        [_, "chain", n] => Layout::Chain {
            len: parse_num(n, line_no, "chain length")?,
        },
        [_, "digraph", n] => Layout::Digraph {
            nodes: parse_num(n, line_no, "node count")?,
        },
        [_, r, c] => Layout::Grid {
            rows: parse_num(r, line_no, "row count")?,
            cols: parse_num(c, line_no, "column count")?,
        },
        _ => return Err(Error::parse(line_no, format!("malformed header `{line}`"))),
    };
    Ok((encoding, layout))
}

pub fn parse_state(text: &str) -> Result<BinaryState> {
    let mut it = lines(text).filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = it
        .next()
        .ok_or_else(|| Error::parse(1, "empty state file"))?;
    let (encoding, layout) = parse_header(hline, header)?;
    let mut values = Vec::with_capacity(layout.len());
    let mut last = hline;
    for (n, l) in it {
        last = n;
        for tok in l.split_whitespace() {
            let v: i8 = parse_num(tok, n, "site value")?;
            if !encoding.is_legal(v) {
                return Err(Error::parse(n, format!("{v} is not a legal {encoding} value")));
            }
            values.push(v);
        }
    }
    if values.len() != layout.len() {
        return Err(Error::parse(
            last,
            format!("header `{layout}` needs {} values, found {}", layout.len(), values.len()),
        ));
    }
    BinaryState::new(encoding, layout, values)
}

pub fn format_state(x: &BinaryState) -> String {
    let mut out = format!("{} {}\n", x.encoding(), x.layout());
    let width = match x.layout() {
        Layout::Grid { cols, .. } => cols,
        Layout::Chain { len } => len,
        Layout::Digraph { nodes } => nodes.saturating_sub(1),
    };
    for row in x.values().chunks(width.max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_state(path: impl AsRef<Path>) -> Result<BinaryState> {
    parse_state(&fs::read_to_string(path)?)
}

pub fn write_state(path: impl AsRef<Path>, x: &BinaryState) -> Result<()> {
    fs::write(path, format_state(x))?;
    Ok(())
}

/// Edge list: a node-count line, then one `i j` arc per line, 0-indexed.
pub fn parse_edge_list(text: &str) -> Result<BinaryState> {
    let mut it = lines(text).filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (hline, header) = it.next().ok_or_else(|| Error::parse(1, "empty edge list"))?;
    let nodes: usize = parse_num(header.trim(), hline, "node count")?;
    if nodes < 2 {
        return Err(Error::parse(hline, "a digraph needs at least two nodes"));
    }
    let mut values = vec![0i8; nodes * (nodes - 1)];
    for (n, l) in it {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let [i, j] = toks.as_slice() else {
            return Err(Error::parse(n, format!("expected `i j`, found `{l}`")));
        };
        let (i, j): (usize, usize) = (parse_num(i, n, "node")?, parse_num(j, n, "node")?);
        if i >= nodes || j >= nodes || i == j {
            return Err(Error::parse(n, format!("invalid arc {i} -> {j} for {nodes} nodes")));
        }
        values[arc_index(nodes, i, j)] = 1;
    }
    BinaryState::new(Encoding::Tie, Layout::Digraph { nodes }, values)
}

pub fn format_edge_list(x: &BinaryState) -> Result<String> {
    let Layout::Digraph { nodes } = x.layout() else {
        return Err(Error::invalid("edge lists need a digraph state"));
    };
    let mut out = format!("{nodes}\n");
    for i in 0..nodes {
        for j in (0..nodes).filter(|&j| j != i) {
            if x.get(arc_index(nodes, i, j)) == 1 {
                let _ = writeln!(out, "{i} {j}");
            }
        }
    }
    Ok(out)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<BinaryState> {
    parse_edge_list(&fs::read_to_string(path)?)
}

/// Header `t,theta_1..theta_L,d_1..d_L,accepted`; `t` counts from 1.
pub fn write_trace<W: Write>(mut w: W, trace: &EstimationTrace) -> Result<()> {
    let dim = trace.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("theta_{i}")));
    header.extend((1..=dim).map(|i| format!("d_{i}")));
    header.push("accepted".into());
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for r in 0..trace.len() {
        line.clear();
        let _ = write!(line, "{}", r + 1);
        for v in trace.theta(r).iter().chain(trace.d(r)) {
            let _ = write!(line, ",{v}");
        }
        let _ = write!(line, ",{}", trace.accepted(r));
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: impl AsRef<Path>, trace: &EstimationTrace) -> Result<()> {
    let f = fs::File::create(path)?;
    write_trace(std::io::BufWriter::new(f), trace)
}

pub fn read_trace<R: BufRead>(r: R) -> Result<EstimationTrace> {
    let mut rows = r.lines();
    let header = rows.next().ok_or_else(|| Error::parse(1, "empty trace"))??;
    let cols = header.trim_end_matches('\r').split(',').count();
    if cols < 4 || cols % 2 != 0 {
        return Err(Error::parse(1, format!("trace header has {cols} columns")));
    }
    let dim = (cols - 2) / 2;
    let mut trace = EstimationTrace::new(dim);
    let mut vals = vec![0.0; 2 * dim];
    for (i, row) in rows.enumerate() {
        let line_no = i + 2;
        let row = row?;
        let row = row.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let toks: Vec<&str> = row.split(',').collect();
        if toks.len() != cols {
            return Err(Error::parse(line_no, format!("expected {cols} fields, found {}", toks.len())));
        }
        for (v, tok) in vals.iter_mut().zip(&toks[1..cols - 1]) {
            *v = parse_num(tok, line_no, "number")?;
        }
        let accepted = parse_num(toks[cols - 1], line_no, "acceptance count")?;
        trace.push(&vals[..dim], &vals[dim..], accepted);
    }
    Ok(trace)
}

pub fn read_trace_file(path: impl AsRef<Path>) -> Result<EstimationTrace> {
    read_trace(std::io::BufReader::new(fs::File::open(path)?))
}

/// `key = value` lines; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, l) in lines(text) {
            let l = l.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::parse(n, format!("expected `key = value`, found `{l}`")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(n, "empty key"));
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("bad value `{v}` for `{key}`"))),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

/// Whitespace-separated reals, e.g. a noisy image or a parameter vector.
pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (n, l) in lines(text) {
        let l = l.split('#').next().unwrap_or("");
        for tok in l.split_whitespace() {
            out.push(parse_num(tok, n, "number")?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_and_crlf() {
        let x = BinaryState::new(
            Encoding::Spin,
            Layout::Grid { rows: 2, cols: 3 },
            vec![1, -1, 1, -1, -1, 1],
        )
        .unwrap();
        let text = format_state(&x);
        assert_eq!(text, "spin 2 3\n1 -1 1\n-1 -1 1\n");
        assert_eq!(parse_state(&text).unwrap(), x);
        assert_eq!(parse_state(&text.replace('\n', "\r\n")).unwrap(), x);
    }

    #[test]
    fn chain_and_digraph_headers() {
        let c = parse_state("spin chain 3\n1 1 -1\n").unwrap();
        assert_eq!(c.layout(), Layout::Chain { len: 3 });
        let d = parse_state("tie digraph 3\n0 1\n1 0\n0 0\n").unwrap();
        assert_eq!(d.layout(), Layout::Digraph { nodes: 3 });
        assert_eq!(parse_state(&format_state(&d)).unwrap(), d);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_state("spin 2 2\n1 1\n1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_state("spin 2 2\n1 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_state("potts 2 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_state("").is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let x = parse_edge_list("3\r\n0 1\r\n1 0\r\n2 0\r\n").unwrap();
        assert_eq!(x.values().iter().filter(|&&v| v == 1).count(), 3);
        assert_eq!(parse_edge_list(&format_edge_list(&x).unwrap()).unwrap(), x);
        assert!(matches!(parse_edge_list("3\n0 0\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn trace_round_trip() {
        let mut t = EstimationTrace::new(2);
        t.push(&[0.1, -0.25], &[1.0, -3.0], 1);
        t.push(&[1e-17, 0.3], &[0.0, 2.0], 0);
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t,theta_1,theta_2,d_1,d_2,accepted");
        assert_eq!(header.split(',').count(), 2 * 2 + 2);
        assert_eq!(read_trace(&buf[..]).unwrap(), t);
    }

    #[test]
    fn key_values() {
        let kv = KeyValues::parse("# run\na = 0.001\r\nm=1 # steps\n\nmodel = vbm\n").unwrap();
        assert_eq!(kv.get::<f64>("a").unwrap(), Some(0.001));
        assert_eq!(kv.get::<usize>("m").unwrap(), Some(1));
        assert_eq!(kv.get_str("model"), Some("vbm"));
        assert!(kv.get::<usize>("model").is_err());
        assert!(KeyValues::parse("nokey\n").is_err());
    }
}
