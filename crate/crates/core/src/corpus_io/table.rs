//! Delimited-text readers and writers for dataset files.
//!
//! TSV is split on tabs without any quoting. CSV follows RFC 4180 strictly:
//! a quote may only open a field, `""` escapes a quote inside a quoted field,
//! and a closing quote must be followed by a delimiter or the end of a record.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Csv,
}

impl Format {
    /// `.csv` means CSV; everything else is read as TSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Tsv,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (expected tsv or csv)")),
        }
    }
}

/// A record with the 1-based line number it started on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub line: usize,
    pub fields: Vec<String>,
}

pub fn parse(content: &str, format: Format, path: &Path) -> Result<Vec<Record>> {
    let content = content.strip_prefix('\u{feff}').unwrap_or(content);
    match format {
        Format::Tsv => Ok(parse_tsv(content)),
        Format::Csv => parse_csv(content, path),
    }
}

fn parse_tsv(content: &str) -> Vec<Record> {
    content
        .split('\n')
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
        .filter(|(_, line)| !line.is_empty())
        .map(|(line, text)| Record {
            line,
            fields: text.split('\t').map(str::to_owned).collect(),
        })
        .collect()
}

fn parse_csv(content: &str, path: &Path) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    let mut chars = content.chars().peekable();
    let mut line = 1usize;

    while chars.peek().is_some() {
        let start_line = line;
        let mut fields = Vec::new();
        let mut field = String::new();
        let mut blank = true;
        loop {
            match chars.next() {
                None => {
                    fields.push(std::mem::take(&mut field));
                    break;
                }
                Some('"') if field.is_empty() => {
                    blank = false;
                    // quoted field
                    loop {
                        match chars.next() {
                            None => {
                                return Err(Error::parse(
                                    path,
                                    start_line,
                                    "unterminated quoted field",
                                ))
                            }
                            Some('"') => match chars.peek() {
                                Some('"') => {
                                    chars.next();
                                    field.push('"');
                                }
                                Some(',') | Some('\n') | Some('\r') | None => break,
                                Some(_) => {
                                    return Err(Error::parse(
                                        path,
                                        line,
                                        "unexpected character after closing quote",
                                    ))
                                }
                            },
                            Some(c) => {
                                if c == '\n' {
                                    line += 1;
                                }
                                field.push(c);
                            }
                        }
                    }
                }
                Some('"') => {
                    return Err(Error::parse(path, line, "quote inside unquoted field"));
                }
                Some(',') => {
                    blank = false;
                    fields.push(std::mem::take(&mut field));
                }
                Some('\r') if chars.peek() == Some(&'\n') => {
                    chars.next();
                    line += 1;
                    fields.push(std::mem::take(&mut field));
                    break;
                }
                Some('\n') => {
                    line += 1;
                    fields.push(std::mem::take(&mut field));
                    break;
                }
                Some(c) => {
                    blank = false;
                    field.push(c);
                }
            }
        }
        if !(blank && fields.len() == 1 && fields[0].is_empty()) {
            records.push(Record {
                line: start_line,
                fields,
            });
        }
    }
    Ok(records)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Serialize rows. TSV fields may not contain tabs or newlines.
pub fn write(rows: &[Vec<&str>], format: Format) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        match format {
            Format::Tsv => {
                if let Some(bad) = row.iter().find(|f| f.contains(['\t', '\n', '\r'])) {
                    return Err(Error::Data(format!(
                        "field {bad:?} contains a tab or newline and cannot be written as TSV"
                    )));
                }
                out.push_str(&row.join("\t"));
            }
            Format::Csv => {
                let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
                out.push_str(&fields.join(","));
            }
        }
        out.push('\n');
    }
    Ok(out)
}
