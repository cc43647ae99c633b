//! Sentences, label sets, text normalization and the on-disk corpus formats.
//!
//! Three formats are supported:
//!
//! * plain: one sentence per line, tokens joined by a single space;
//! * tagged: one `token<TAB>label` line per token, sentences separated by a
//!   blank line (always written, optional after the last sentence on read);
//! * judged: one `label<TAB>tokens` line per sentence, label `right`/`error`.
//!
//! All formats are UTF-8 with `\n` line endings.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-token disfluency label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// Disfluent: part of a reparandum, to be removed.
    D,
    /// Fluent.
    O,
}

impl Label {
    pub fn is_d(self) -> bool {
        self == Label::D
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::D => "D",
            Label::O => "O",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" => Ok(Label::D),
            "O" => Ok(Label::O),
            other => Err(Error::InvalidLabel(other.to_string())),
        }
    }
}

/// Whole-sentence grammaticality label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grammaticality {
    Right,
    Error,
}

impl Grammaticality {
    pub fn as_str(self) -> &'static str {
        match self {
            Grammaticality::Right => "right",
            Grammaticality::Error => "error",
        }
    }
}

impl fmt::Display for Grammaticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grammaticality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Grammaticality::Right),
            "error" => Ok(Grammaticality::Error),
            other => Err(Error::InvalidLabel(other.to_string())),
        }
    }
}

fn valid_token(t: &str) -> bool {
    !t.is_empty() && !t.chars().any(char::is_whitespace)
}

/// A whitespace-tokenized sentence. May be empty (for example after
/// removing every disfluent token); readers and normalization never yield
/// empty sentences.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl Sentence {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if let Some(bad) = tokens.iter().find(|t| !valid_token(t)) {
            return Err(Error::InvalidToken(bad.clone()));
        }
        Ok(Sentence { tokens, id: None })
    }

    /// Splits on runs of whitespace. Infallible since the pieces cannot
    /// contain whitespace.
    pub fn from_line(line: &str) -> Self {
        Sentence {
            tokens: line.split_whitespace().map(str::to_string).collect(),
            id: None,
        }
    }

    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| valid_token(t)));
        Sentence { tokens, id: None }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_line(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// A sentence with one D/O label per token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedSentence {
    sentence: Sentence,
    labels: Vec<Label>,
}

impl TaggedSentence {
    pub fn new(sentence: Sentence, labels: Vec<Label>) -> Result<Self> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        if sentence.len() != labels.len() {
            return Err(Error::LengthMismatch {
                tokens: sentence.len(),
                labels: labels.len(),
            });
        }
        Ok(TaggedSentence { sentence, labels })
    }

    /// Every token labeled O.
    pub fn fluent(sentence: Sentence) -> Result<Self> {
        let labels = vec![Label::O; sentence.len()];
        TaggedSentence::new(sentence, labels)
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    pub fn tokens(&self) -> &[String] {
        self.sentence.tokens()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn disfluent_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_d()).count()
    }

    pub fn into_parts(self) -> (Sentence, Vec<Label>) {
        (self.sentence, self.labels)
    }

    /// Same tokens, different labels.
    pub fn relabel(&self, labels: Vec<Label>) -> Result<Self> {
        TaggedSentence::new(self.sentence.clone(), labels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JudgedSentence {
    pub sentence: Sentence,
    pub label: Grammaticality,
}

impl JudgedSentence {
    pub fn new(sentence: Sentence, label: Grammaticality) -> Self {
        JudgedSentence { sentence, label }
    }
}

/// Switches for each normalization step. All on by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationOptions {
    pub lowercase: bool,
    pub strip_punctuation: bool,
    pub strip_partial_words: bool,
    pub strip_fillers: bool,
    pub merge_discourse_markers: bool,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        NormalizationOptions {
            lowercase: true,
            strip_punctuation: true,
            strip_partial_words: true,
            strip_fillers: true,
            merge_discourse_markers: true,
        }
    }
}

impl NormalizationOptions {
    pub fn none() -> Self {
        NormalizationOptions {
            lowercase: false,
            strip_punctuation: false,
            strip_partial_words: false,
            strip_fillers: false,
            merge_discourse_markers: false,
        }
    }
}

const FILLERS: [&str; 2] = ["um", "uh"];
const MERGED_BIGRAMS: [(&str, &str); 2] = [("you", "know"), ("i", "mean")];
const MERGE_GLUE: char = '_';

fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

fn trim_attached_punctuation(mut token: &str) -> &str {
    loop {
        let next = token
            .trim_matches(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''))
            .trim_start_matches('-');
        if next.len() == token.len() {
            return next;
        }
        token = next;
    }
}

/// Normalizes one raw line. The result is empty if every token was removed;
/// callers decide whether to drop it (see [`normalize_lines`]).
pub fn normalize(raw_line: &str, options: &NormalizationOptions) -> Sentence {
    let mut tokens: Vec<String> = Vec::new();
    for raw in raw_line.split_whitespace() {
        let lowered;
        let mut tok: &str = raw;
        if options.lowercase {
            lowered = raw.to_lowercase();
            tok = &lowered;
        }
        if options.strip_punctuation {
            if is_punctuation(tok) {
                continue;
            }
            tok = trim_attached_punctuation(tok);
        }
        if options.strip_partial_words && tok.ends_with('-') {
            continue;
        }
        if options.strip_fillers && FILLERS.contains(&tok) {
            continue;
        }
        if !tok.is_empty() {
            tokens.push(tok.to_string());
        }
    }

    if options.merge_discourse_markers {
        let mut merged = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len()
                && MERGED_BIGRAMS
                    .iter()
                    .any(|(a, b)| tokens[i] == *a && tokens[i + 1] == *b)
            {
                merged.push(format!("{}{}{}", tokens[i], MERGE_GLUE, tokens[i + 1]));
                i += 2;
            } else {
                merged.push(std::mem::take(&mut tokens[i]));
                i += 1;
            }
        }
        tokens = merged;
    }

    Sentence::from_tokens_unchecked(tokens)
}

/// Normalizes a batch of lines, dropping the ones that end up empty.
/// Returns the kept sentences and the number dropped.
pub fn normalize_lines<I, S>(lines: I, options: &NormalizationOptions) -> (Vec<Sentence>, usize)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut dropped = 0;
    let mut out = Vec::new();
    for line in lines {
        let s = normalize(line.as_ref(), options);
        if s.is_empty() {
            dropped += 1;
        } else {
            out.push(s);
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} sentences that normalized to nothing");
    }
    (out, dropped)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Line iterator that reports invalid UTF-8 with its 1-based line number.
struct Lines<R> {
    reader: R,
    path: PathBuf,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R, path: PathBuf) -> Self {
        Lines {
            reader,
            path,
            line: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for Lines<R> {
    type Item = Result<(usize, String)>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                if self.buf.last() == Some(&b'\n') {
                    self.buf.pop();
                    if self.buf.last() == Some(&b'\r') {
                        self.buf.pop();
                    }
                }
                match String::from_utf8(std::mem::take(&mut self.buf)) {
                    Ok(s) => Some(Ok((self.line, s))),
                    Err(_) => Some(Err(Error::Encoding {
                        path: self.path.clone(),
                        line: self.line,
                    })),
                }
            }
            Err(e) => Some(Err(Error::io(&self.path, e))),
        }
    }
}

/// Streaming reader for the plain format. Blank lines are skipped.
pub struct PlainReader<R> {
    lines: Lines<R>,
}

impl<R: BufRead> PlainReader<R> {
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        PlainReader {
            lines: Lines::new(reader, path.into()),
        }
    }
}

impl<R: BufRead> Iterator for PlainReader<R> {
    type Item = Result<Sentence>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.lines.next()? {
                Ok((_, line)) => {
                    let s = Sentence::from_line(&line);
                    if !s.is_empty() {
                        return Some(Ok(s));
                    }
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn read_plain(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    PlainReader::new(open(path)?, path).collect()
}

/// Reads raw text lines and normalizes them, dropping empty results.
pub fn read_raw(
    path: impl AsRef<Path>,
    options: &NormalizationOptions,
) -> Result<(Vec<Sentence>, usize)> {
    let path = path.as_ref();
    let lines = Lines::new(open(path)?, path.to_path_buf())
        .map(|r| r.map(|(_, l)| l))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_lines(lines, options))
}

pub fn write_plain_to<'a, W, I>(mut w: W, sentences: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Sentence>,
{
    for s in sentences {
        writeln!(w, "{}", s.to_line())?;
    }
    w.flush()
}

pub fn write_plain<'a, I>(path: impl AsRef<Path>, sentences: I) -> Result<()>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let path = path.as_ref();
    write_plain_to(create(path)?, sentences).map_err(|e| Error::io(path, e))
}

/// Streaming reader for the tagged column format.
pub struct TaggedReader<R> {
    lines: Lines<R>,
    sentence: usize,
    done: bool,
}

impl<R: BufRead> TaggedReader<R> {
    pub fn new(reader: R, path: impl Into<PathBuf>) -> Self {
        TaggedReader {
            lines: Lines::new(reader, path.into()),
            sentence: 0,
            done: false,
        }
    }

    fn parse_error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.lines.path.clone(),
            line,
            sentence: self.sentence,
            message: message.into(),
        }
    }
}

impl<R: BufRead> Iterator for TaggedReader<R> {
    type Item = Result<TaggedSentence>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut tokens = Vec::new();
        let mut labels = Vec::new();
        loop {
            match self.lines.next() {
                None => {
                    self.done = true;
                    break;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok((lineno, line))) => {
                    if line.is_empty() {
                        if tokens.is_empty() {
                            continue;
                        }
                        break;
                    }
                    let Some((tok, lab)) = line.split_once('\t') else {
                        self.done = true;
                        return Some(Err(self.parse_error(lineno, "expected token<TAB>label")));
                    };
                    if !valid_token(tok) {
                        self.done = true;
                        return Some(Err(
                            self.parse_error(lineno, format!("invalid token {tok:?}"))
                        ));
                    }
                    match lab.parse::<Label>() {
                        Ok(l) => {
                            tokens.push(tok.to_string());
                            labels.push(l);
                        }
                        Err(_) => {
                            self.done = true;
                            return Some(Err(
                                self.parse_error(lineno, format!("invalid label {lab:?}"))
                            ));
                        }
                    }
                }
            }
        }
        if tokens.is_empty() {
            return None;
        }
        self.sentence += 1;
        Some(TaggedSentence::new(
            Sentence::from_tokens_unchecked(tokens),
            labels,
        ))
    }
}

pub fn read_tagged(path: impl AsRef<Path>) -> Result<Vec<TaggedSentence>> {
    let path = path.as_ref();
    TaggedReader::new(open(path)?, path).collect()
}

pub fn write_tagged_to<'a, W, I>(mut w: W, tagged: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    for t in tagged {
        for (tok, lab) in t.tokens().iter().zip(t.labels()) {
            writeln!(w, "{tok}\t{lab}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_tagged<'a, I>(path: impl AsRef<Path>, tagged: I) -> Result<()>
where
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    let path = path.as_ref();
    write_tagged_to(create(path)?, tagged).map_err(|e| Error::io(path, e))
}

pub fn read_judged(path: impl AsRef<Path>) -> Result<Vec<JudgedSentence>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for item in Lines::new(open(path)?, path.to_path_buf()) {
        let (lineno, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            sentence: out.len(),
            message,
        };
        let (lab, text) = line
            .split_once('\t')
            .ok_or_else(|| parse_error("expected label<TAB>sentence".into()))?;
        let label = lab
            .parse::<Grammaticality>()
            .map_err(|_| parse_error(format!("invalid label {lab:?}")))?;
        let sentence = Sentence::from_line(text);
        if sentence.is_empty() {
            return Err(parse_error("empty sentence".into()));
        }
        out.push(JudgedSentence::new(sentence, label));
    }
    Ok(out)
}

pub fn write_judged_to<'a, W, I>(mut w: W, judged: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a JudgedSentence>,
{
    for j in judged {
        writeln!(w, "{}\t{}", j.label, j.sentence.to_line())?;
    }
    w.flush()
}

pub fn write_judged<'a, I>(path: impl AsRef<Path>, judged: I) -> Result<()>
where
    I: IntoIterator<Item = &'a JudgedSentence>,
{
    let path = path.as_ref();
    write_judged_to(create(path)?, judged).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &Sentence) -> Vec<&str> {
        s.tokens().iter().map(String::as_str).collect()
    }

    fn parse_tagged(text: &str) -> Result<Vec<TaggedSentence>> {
        TaggedReader::new(text.as_bytes(), "<mem>").collect()
    }

    #[test]
    fn normalize_examples() {
        let opts = NormalizationOptions::default();
        assert_eq!(toks(&normalize("The cat, uh, sat-", &opts)), ["the", "cat"]);
        assert_eq!(
            toks(&normalize("you know I mean yes", &opts)),
            ["you_know", "i_mean", "yes"]
        );
        assert_eq!(toks(&normalize("HELLO", &opts)), ["hello"]);
    }

    #[test]
    fn normalize_steps_are_toggleable() {
        let mut opts = NormalizationOptions::none();
        assert_eq!(
            toks(&normalize("The cat , uh sat-", &opts)),
            ["The", "cat", ",", "uh", "sat-"]
        );
        opts.lowercase = true;
        opts.strip_fillers = true;
        assert_eq!(
            toks(&normalize("The cat , uh sat-", &opts)),
            ["the", "cat", ",", "sat-"]
        );
        opts.strip_punctuation = true;
        assert_eq!(
            toks(&normalize("The cat , uh sat-", &opts)),
            ["the", "cat", "sat-"]
        );
    }

    #[test]
    fn fillers_removed_before_merging() {
        let opts = NormalizationOptions::default();
        assert_eq!(toks(&normalize("you uh know", &opts)), ["you_know"]);
        assert_eq!(
            toks(&normalize("don't stop -- now", &opts)),
            ["don't", "stop", "now"]
        );
    }

    #[test]
    fn all_removed_gives_empty() {
        let opts = NormalizationOptions::default();
        assert!(normalize("uh , um -", &opts).is_empty());
        let (kept, dropped) = normalize_lines(["uh", "hello there", "..."], &opts);
        assert_eq!(kept.len(), 1);
        assert_eq!(dropped, 2);
    }

    #[test]
    fn plain_reader_collapses_whitespace_and_skips_blank_lines() {
        let text = "a  b\n\n  \nc\n";
        let got: Vec<Sentence> = PlainReader::new(text.as_bytes(), "<mem>")
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(toks(&got[0]), ["a", "b"]);
        assert_eq!(toks(&got[1]), ["c"]);
        let empty: Vec<Sentence> = PlainReader::new(&b""[..], "<mem>")
            .collect::<Result<_>>()
            .unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn plain_reader_reports_bad_utf8_line() {
        let bytes: &[u8] = b"ok line\n\xff\xfe bad\n";
        let err = PlainReader::new(bytes, "f.txt")
            .collect::<Result<Vec<_>>>()
            .unwrap_err();
        assert!(matches!(err, Error::Encoding { line: 2, .. }), "{err}");
    }

    #[test]
    fn tagged_reader_basic() {
        let got = parse_tagged("a\tO\nb\tD\n\n").unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(toks(got[0].sentence()), ["a", "b"]);
        assert_eq!(got[0].labels(), [Label::O, Label::D]);
        // trailing blank line optional, repeated blanks tolerated
        let got = parse_tagged("a\tO\n\n\nb\tD").unwrap();
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn tagged_reader_rejects_bad_label() {
        let err = parse_tagged("a\tO\n\nb\tO\nc\tX\n").unwrap_err();
        match err {
            Error::Parse { sentence, line, .. } => {
                assert_eq!(sentence, 1);
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(parse_tagged("a O\n").is_err());
    }

    #[test]
    fn tagged_sentence_checks_lengths() {
        let s = Sentence::new(["a", "b"]).unwrap();
        assert!(matches!(
            TaggedSentence::new(s.clone(), vec![Label::O]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(TaggedSentence::new(s, vec![Label::O, Label::D]).is_ok());
        assert!(Sentence::new(["a b"]).is_err());
        assert!(Sentence::new([""]).is_err());
    }

    #[test]
    fn judged_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.tsv");
        let data = vec![
            JudgedSentence::new(Sentence::from_line("the cat sat"), Grammaticality::Right),
            JudgedSentence::new(Sentence::from_line("the the cat"), Grammaticality::Error),
        ];
        write_judged(&path, &data).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "right\tthe cat sat\nerror\tthe the cat\n"
        );
        assert_eq!(read_judged(&path).unwrap(), data);
    }

    fn arb_token() -> impl Strategy<Value = String> {
        "[a-z']{1,6}|[a-z]{1,3}_[a-z]{1,3}|x{0,2}é".prop_filter("non-empty", |s| !s.is_empty())
    }

    fn arb_tagged() -> impl Strategy<Value = TaggedSentence> {
        prop::collection::vec(
            (
                arb_token(),
                prop::bool::ANY.prop_map(|b| if b { Label::D } else { Label::O }),
            ),
            1..20,
        )
        .prop_map(|pairs| {
            let (tokens, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            TaggedSentence::new(Sentence::new(tokens).unwrap(), labels).unwrap()
        })
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "[A-Za-z ,.!?'\\-]{0,60}|(you|know|i|mean|uh|um|Hi-|x){1,8}") {
            let opts = NormalizationOptions::default();
            let once = normalize(&raw, &opts);
            let twice = normalize(&once.to_line(), &opts);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tagged_round_trip(corpus in prop::collection::vec(arb_tagged(), 0..8)) {
            let mut buf = Vec::new();
            write_tagged_to(&mut buf, &corpus).unwrap();
            let back = parse_tagged(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, corpus);
        }

        #[test]
        fn plain_round_trip(corpus in prop::collection::vec(arb_tagged(), 0..8)) {
            let sentences: Vec<Sentence> = corpus.iter().map(|t| t.sentence().clone()).collect();
            let mut buf = Vec::new();
            write_plain_to(&mut buf, &sentences).unwrap();
            let back: Vec<Sentence> = PlainReader::new(&buf[..], "<mem>").collect::<Result<_>>().unwrap();
            prop_assert_eq!(back, sentences);
        }
    }
}
