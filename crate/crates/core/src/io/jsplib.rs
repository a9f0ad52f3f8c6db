//! JSPLIB instance text.
//!
//! ```text
//! file    := { comment | blank } header { job-line | comment | blank }
//! comment := optional spaces, '#', anything to end of line
//! header  := J M                  (two positive integers)
//! job-line:= (machine duration){M} (machine in [0, M), duration >= 1)
//! ```
//! Exactly `J` job lines must follow the header.

use crate::error::{Error, Result};
use crate::instance::Instance;

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn number(tok: &Token<'_>, line: usize, what: &str) -> Result<usize> {
    tok.text
        .parse::<usize>()
        .map_err(|_| parse_error(line, tok.column, format!("expected {what}, found `{}`", tok.text)))
}

pub fn parse_jsplib(text: &str) -> Result<Instance> {
    let mut header: Option<(usize, usize)> = None;
    let mut machines: Vec<Vec<usize>> = Vec::new();
    let mut durations: Vec<Vec<u32>> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        if raw.trim_start().starts_with('#') {
            continue;
        }
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        let Some((jobs, m)) = header else {
            if toks.len() != 2 {
                let col = toks.get(2).map_or(raw.len() + 1, |t| t.column);
                return Err(parse_error(line, col, "header must be `jobs machines`"));
            }
            let j = number(&toks[0], line, "job count")?;
            let m = number(&toks[1], line, "machine count")?;
            if j == 0 {
                return Err(parse_error(line, toks[0].column, "job count must be positive"));
            }
            if m == 0 {
                return Err(parse_error(line, toks[1].column, "machine count must be positive"));
            }
            header = Some((j, m));
            continue;
        };
        if machines.len() == jobs {
            return Err(parse_error(line, toks[0].column, format!("more than {jobs} job lines")));
        }
        if toks.len() != 2 * m {
            let col = toks.get(2 * m).map_or(raw.len() + 1, |t| t.column);
            return Err(parse_error(
                line,
                col,
                format!("expected {m} (machine, duration) pairs, found {} values", toks.len()),
            ));
        }
        let mut row_m = Vec::with_capacity(m);
        let mut row_d = Vec::with_capacity(m);
        for pair in toks.chunks_exact(2) {
            let machine = number(&pair[0], line, "machine index")?;
            if machine >= m {
                return Err(parse_error(
                    line,
                    pair[0].column,
                    format!("machine {machine} out of range [0, {m})"),
                ));
            }
            let d = number(&pair[1], line, "duration")?;
            if d < 1 || d > u32::MAX as usize {
                return Err(parse_error(line, pair[1].column, format!("duration {d} must be in [1, 2^32)")));
            }
            if row_m.contains(&machine) {
                return Err(parse_error(
                    line,
                    pair[0].column,
                    format!("machine {machine} appears twice in one job"),
                ));
            }
            row_m.push(machine);
            row_d.push(d as u32);
        }
        machines.push(row_m);
        durations.push(row_d);
    }
    let Some((jobs, m)) = header else {
        return Err(parse_error(last_line.max(1), 1, "missing header"));
    };
    if machines.len() != jobs {
        return Err(parse_error(
            last_line + 1,
            1,
            format!("expected {jobs} job lines, found {}", machines.len()),
        ));
    }
    Instance::new(m, machines, durations)
}

pub fn format_jsplib(inst: &Instance) -> String {
    let mut out = format!("{} {}\n", inst.num_jobs(), inst.num_machines());
    for j in 0..inst.num_jobs() {
        let row: Vec<String> = (0..inst.tasks_per_job())
            .map(|t| {
                let id = inst.task(j, t);
                format!("{} {}", inst.machine(id), inst.duration(id))
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;

    #[test]
    fn parses_two_by_two() {
        assert_eq!(parse_jsplib("2 2\n0 3 1 2\n1 2 0 4").unwrap(), two_by_two());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# instance\n\n  # another\n2 2\n0 3 1 2\n\n1 2 0 4\n";
        assert_eq!(parse_jsplib(text).unwrap(), two_by_two());
    }

    #[test]
    fn arity_error_has_position() {
        match parse_jsplib("2 2\n0 3 1 2 1 1\n1 2 0 4") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        let cases = [
            ("2 2\n0 0 1 2\n1 2 0 4", 2, 3),
            ("2 2\n0 3 2 2\n1 2 0 4", 2, 5),
            ("2 x\n0 3 1 2\n1 2 0 4", 1, 3),
            ("2 2\n0 3 1 2\n", 3, 1),
            ("2 2\n0 3 1 2\n1 2 0 4\n0 1 1 1", 4, 1),
            ("", 1, 1),
        ];
        for (text, line, column) in cases {
            match parse_jsplib(text) {
                Err(Error::Parse { line: l, column: c, .. }) => assert_eq!((l, c), (line, column), "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip() {
        let inst = two_by_two();
        assert_eq!(parse_jsplib(&format_jsplib(&inst)).unwrap(), inst);
    }
}
