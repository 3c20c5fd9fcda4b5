//! Reader for the WordNet 3.x database layout (`index.<pos>` and
//! `data.<pos>` files).
//!
//! Index lines: `lemma pos synset_cnt p_cnt [ptr_symbol]* sense_cnt
//! tagsense_cnt [synset_offset]*`. Data lines: `synset_offset lex_filenum
//! ss_type w_cnt [word lex_id]* p_cnt ... | gloss`, with `w_cnt` and `lex_id`
//! in hexadecimal. Lines starting with a space are the license preamble.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use super::{normalize_lemma, PosTag, SynonymProvider};
use crate::error::{Error, Result};

const FILE_POS: [(&str, PosTag); 4] = [
    ("noun", PosTag::Noun),
    ("verb", PosTag::Verb),
    ("adj", PosTag::Adjective),
    ("adv", PosTag::Adverb),
];

pub fn load_wndb(dir: impl AsRef<Path>) -> Result<SynonymProvider> {
    let dir = dir.as_ref();
    let mut index: BTreeMap<(String, PosTag), BTreeSet<String>> = BTreeMap::new();
    let mut pos_index: BTreeMap<String, BTreeSet<PosTag>> = BTreeMap::new();
    for (suffix, pos) in FILE_POS {
        let data_path = dir.join(format!("data.{suffix}"));
        let index_path = dir.join(format!("index.{suffix}"));
        let data_text = fs::read_to_string(&data_path).map_err(|e| Error::io(&data_path, e))?;
        let index_text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
        let synsets = parse_data(&data_text, &data_path.display().to_string())?;
        let file = index_path.display().to_string();
        for (i, line) in content_lines(&index_text) {
            let (lemma, offsets) = parse_index_line(line).map_err(|message| Error::SynonymParse {
                file: file.clone(),
                line: i + 1,
                message,
            })?;
            let lemma = normalize_lemma(&lemma);
            let mut syns = BTreeSet::new();
            for off in offsets {
                let words = synsets.get(&off).ok_or_else(|| Error::SynonymParse {
                    file: file.clone(),
                    line: i + 1,
                    message: format!("synset offset {off:08} not found in data.{suffix}"),
                })?;
                syns.extend(words.iter().filter(|w| **w != lemma).cloned());
            }
            index.entry((lemma.clone(), pos)).or_default().extend(syns);
            pos_index.entry(lemma).or_default().insert(pos);
        }
    }
    Ok(SynonymProvider::from_parts(index, pos_index))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with(' '))
}

fn parse_data(text: &str, file: &str) -> Result<HashMap<u64, Vec<String>>> {
    let mut out = HashMap::new();
    for (i, line) in content_lines(text) {
        let (off, words) = parse_data_line(line).map_err(|message| Error::SynonymParse {
            file: file.to_string(),
            line: i + 1,
            message,
        })?;
        out.insert(off, words);
    }
    Ok(out)
}

fn parse_data_line(line: &str) -> std::result::Result<(u64, Vec<String>), String> {
    let head = line.split(" | ").next().unwrap_or(line);
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.len() < 4 {
        return Err("data line has fewer than four fields".into());
    }
    let offset: u64 = f[0].parse().map_err(|_| format!("bad synset offset `{}`", f[0]))?;
    if !matches!(f[2], "n" | "v" | "a" | "s" | "r") {
        return Err(format!("bad synset type `{}`", f[2]));
    }
    let w_cnt = usize::from_str_radix(f[3], 16).map_err(|_| format!("bad word count `{}`", f[3]))?;
    if w_cnt == 0 || f.len() < 4 + 2 * w_cnt {
        return Err(format!("word count {w_cnt} exceeds the fields on the line"));
    }
    let words = (0..w_cnt)
        .map(|k| normalize_lemma(strip_adj_marker(f[4 + 2 * k])))
        .collect();
    Ok((offset, words))
}

/// Adjectives may carry a syntactic marker such as `(p)`, `(a)` or `(ip)`.
fn strip_adj_marker(word: &str) -> &str {
    match word.find('(') {
        Some(i) if word.ends_with(')') && i > 0 => &word[..i],
        _ => word,
    }
}

fn parse_index_line(line: &str) -> std::result::Result<(String, Vec<u64>), String> {
    let f: Vec<&str> = line.split_whitespace().collect();
    let num = |k: usize, what: &str| -> std::result::Result<usize, String> {
        f.get(k)
            .ok_or_else(|| format!("missing {what}"))?
            .parse()
            .map_err(|_| format!("bad {what} `{}`", f[k]))
    };
    if f.len() < 6 {
        return Err("index line has fewer than six fields".into());
    }
    let synset_cnt = num(2, "synset_cnt")?;
    let p_cnt = num(3, "p_cnt")?;
    let first_offset = 4 + p_cnt + 2;
    if f.len() != first_offset + synset_cnt {
        return Err(format!(
            "expected {} fields for {synset_cnt} synsets and {p_cnt} pointers, found {}",
            first_offset + synset_cnt,
            f.len()
        ));
    }
    let offsets = f[first_offset..]
        .iter()
        .map(|o| o.parse::<u64>().map_err(|_| format!("bad synset offset `{o}`")))
        .collect::<std::result::Result<_, _>>()?;
    Ok((f[0].to_string(), offsets))
}
