//! The Essence kernel: areas of concern, alphas, activity spaces and
//! competencies, plus the `kernel.<category>.<Name>` paths graphs bind to.
//!
//! Kernel content is data. The standard kernel ships as a text file in the
//! same token family as `.ess` documents, and custom kernels use the same
//! grammar:
//!
//! ```text
//! kernel "Title" {
//!   area customer "Customer" color green {
//!     alpha Opportunity { state "Identified" state "Viable" }
//!     space ExplorePossibilities
//!     competency StakeholderRepresentation { level "Assists" }
//!   }
//! }
//! ```
//!
//! A file that starts with `extend kernel` is merged into the standard kernel
//! instead of replacing it.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{quote, unexpected, ParseError, Token, TokenStream};

const STANDARD_KERNEL: &str = include_str!("../data/essence-1.1.kernel");

/// Environment variable naming a replacement or extension kernel file.
pub const KERNEL_ENV: &str = "ESSENCERY_KERNEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaKey {
    Customer,
    Solution,
    Endeavor,
}

impl AreaKey {
    pub const ALL: [AreaKey; 3] = [AreaKey::Customer, AreaKey::Solution, AreaKey::Endeavor];

    pub fn as_str(self) -> &'static str {
        match self {
            AreaKey::Customer => "customer",
            AreaKey::Solution => "solution",
            AreaKey::Endeavor => "endeavor",
        }
    }
}

impl fmt::Display for AreaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AreaKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AreaKey::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown area of concern `{s}`"))
    }
}

/// Named render colors a kernel may assign to an area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorToken {
    Green,
    Yellow,
    Blue,
    Red,
    Orange,
    Purple,
    Gray,
    Teal,
    White,
}

impl ColorToken {
    pub const ALL: [ColorToken; 9] = [
        ColorToken::Green,
        ColorToken::Yellow,
        ColorToken::Blue,
        ColorToken::Red,
        ColorToken::Orange,
        ColorToken::Purple,
        ColorToken::Gray,
        ColorToken::Teal,
        ColorToken::White,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ColorToken::Green => "green",
            ColorToken::Yellow => "yellow",
            ColorToken::Blue => "blue",
            ColorToken::Red => "red",
            ColorToken::Orange => "orange",
            ColorToken::Purple => "purple",
            ColorToken::Gray => "gray",
            ColorToken::Teal => "teal",
            ColorToken::White => "white",
        }
    }

    /// Fill color used by the SVG renderer.
    pub fn hex(self) -> &'static str {
        match self {
            ColorToken::Green => "#b9e4b0",
            ColorToken::Yellow => "#fbeea0",
            ColorToken::Blue => "#aacdf2",
            ColorToken::Red => "#f3aaaa",
            ColorToken::Orange => "#f9cf9c",
            ColorToken::Purple => "#d6bdf0",
            ColorToken::Gray => "#d9d9d9",
            ColorToken::Teal => "#a6e0d8",
            ColorToken::White => "#ffffff",
        }
    }
}

impl FromStr for ColorToken {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ColorToken::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown color token `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaOfConcern {
    pub key: AreaKey,
    pub display_name: String,
    pub color: ColorToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelAlpha {
    pub name: String,
    pub area: AreaKey,
    pub states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpace {
    pub name: String,
    pub area: AreaKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCompetency {
    pub name: String,
    pub area: AreaKey,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelCategory {
    Alpha,
    Space,
    Competency,
}

impl KernelCategory {
    pub const ALL: [KernelCategory; 3] = [
        KernelCategory::Alpha,
        KernelCategory::Space,
        KernelCategory::Competency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelCategory::Alpha => "alpha",
            KernelCategory::Space => "space",
            KernelCategory::Competency => "competency",
        }
    }
}

impl fmt::Display for KernelCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KernelCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown kernel category `{s}`"))
    }
}

/// `kernel.<category>.<Name>`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KernelPath {
    pub category: KernelCategory,
    pub name: String,
}

impl KernelPath {
    pub fn new(category: KernelCategory, name: impl Into<String>) -> Self {
        KernelPath {
            category,
            name: name.into(),
        }
    }
}

impl fmt::Display for KernelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kernel.{}.{}", self.category, self.name)
    }
}

pub(crate) fn is_element_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for KernelPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, '.');
        let (Some("kernel"), Some(category), Some(name)) =
            (parts.next(), parts.next(), parts.next())
        else {
            return Err(format!("`{s}` is not of the form kernel.<category>.<Name>"));
        };
        let category = category.parse()?;
        if !is_element_name(name) {
            return Err(format!("`{name}` is not a valid kernel element name"));
        }
        Ok(KernelPath::new(category, name))
    }
}

impl Serialize for KernelPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KernelPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A borrowed kernel element returned by [`Kernel::resolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelElement<'k> {
    Alpha(&'k KernelAlpha),
    Space(&'k KernelSpace),
    Competency(&'k KernelCompetency),
}

impl<'k> KernelElement<'k> {
    pub fn name(&self) -> &'k str {
        match self {
            KernelElement::Alpha(a) => &a.name,
            KernelElement::Space(s) => &s.name,
            KernelElement::Competency(c) => &c.name,
        }
    }

    pub fn area(&self) -> AreaKey {
        match self {
            KernelElement::Alpha(a) => a.area,
            KernelElement::Space(s) => s.area,
            KernelElement::Competency(c) => c.area,
        }
    }

    pub fn category(&self) -> KernelCategory {
        match self {
            KernelElement::Alpha(_) => KernelCategory::Alpha,
            KernelElement::Space(_) => KernelCategory::Space,
            KernelElement::Competency(_) => KernelCategory::Competency,
        }
    }

    pub fn path(&self) -> KernelPath {
        KernelPath::new(self.category(), self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("{path} not found{}", found_in.map(|c| format!(" (a {c} with that name exists)")).unwrap_or_default())]
    NotFound {
        path: KernelPath,
        /// Set when the name exists under a different category.
        found_in: Option<KernelCategory>,
    },
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("cannot read kernel file {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("kernel parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("duplicate kernel element {0}")]
    Duplicate(KernelPath),
}

/// Whether a kernel file replaces or extends the standard kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Replace,
    Extend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Kernel {
    title: String,
    areas: Vec<AreaOfConcern>,
    alphas: Vec<KernelAlpha>,
    spaces: Vec<KernelSpace>,
    competencies: Vec<KernelCompetency>,
}

impl Kernel {
    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn areas(&self) -> &[AreaOfConcern] {
        &self.areas
    }

    pub fn area(&self, key: AreaKey) -> Option<&AreaOfConcern> {
        self.areas.iter().find(|a| a.key == key)
    }

    pub fn alphas(&self) -> &[KernelAlpha] {
        &self.alphas
    }

    pub fn spaces(&self) -> &[KernelSpace] {
        &self.spaces
    }

    pub fn competencies(&self) -> &[KernelCompetency] {
        &self.competencies
    }

    /// Every element, alphas first, then spaces, then competencies.
    pub fn elements(&self) -> impl Iterator<Item = KernelElement<'_>> {
        self.alphas
            .iter()
            .map(KernelElement::Alpha)
            .chain(self.spaces.iter().map(KernelElement::Space))
            .chain(self.competencies.iter().map(KernelElement::Competency))
    }

    fn find(&self, category: KernelCategory, name: &str) -> Option<KernelElement<'_>> {
        match category {
            KernelCategory::Alpha => self
                .alphas
                .iter()
                .find(|a| a.name == name)
                .map(KernelElement::Alpha),
            KernelCategory::Space => self
                .spaces
                .iter()
                .find(|s| s.name == name)
                .map(KernelElement::Space),
            KernelCategory::Competency => self
                .competencies
                .iter()
                .find(|c| c.name == name)
                .map(KernelElement::Competency),
        }
    }

    /// Exact, case-sensitive lookup.
    pub fn resolve(&self, path: &KernelPath) -> Result<KernelElement<'_>, ResolveError> {
        self.find(path.category, &path.name)
            .ok_or_else(|| ResolveError::NotFound {
                path: path.clone(),
                found_in: KernelCategory::ALL
                    .into_iter()
                    .find(|&c| c != path.category && self.find(c, &path.name).is_some()),
            })
    }

    /// Merges `other` into this kernel. Areas redeclared by `other` take its
    /// display name and color; element names must not collide.
    pub fn extend(&mut self, other: Kernel) -> Result<(), KernelError> {
        for el in other.elements() {
            if self.find(el.category(), el.name()).is_some() {
                return Err(KernelError::Duplicate(el.path()));
            }
        }
        for area in other.areas {
            match self.areas.iter_mut().find(|a| a.key == area.key) {
                Some(existing) => *existing = area,
                None => self.areas.push(area),
            }
        }
        self.alphas.extend(other.alphas);
        self.spaces.extend(other.spaces);
        self.competencies.extend(other.competencies);
        self.normalize_order();
        Ok(())
    }

    /// Groups elements by area (in area order) while keeping relative order,
    /// so the printed form re-parses to an equal value.
    fn normalize_order(&mut self) {
        let rank = |key: AreaKey| {
            self.areas
                .iter()
                .position(|a| a.key == key)
                .unwrap_or(usize::MAX)
        };
        let mut alphas = std::mem::take(&mut self.alphas);
        let mut spaces = std::mem::take(&mut self.spaces);
        let mut competencies = std::mem::take(&mut self.competencies);
        alphas.sort_by_key(|a| rank(a.area));
        spaces.sort_by_key(|s| rank(s.area));
        competencies.sort_by_key(|c| rank(c.area));
        self.alphas = alphas;
        self.spaces = spaces;
        self.competencies = competencies;
    }
}

/// The bundled Essence 1.1 kernel.
pub fn load_standard_kernel() -> Result<Kernel, KernelError> {
    let (mode, kernel) = parse_kernel(STANDARD_KERNEL)?;
    debug_assert_eq!(mode, LoadMode::Replace);
    Ok(kernel)
}

/// Loads a kernel file. Plain files replace the standard kernel; files
/// starting with `extend` are merged into it.
pub fn load_kernel(path: &Path) -> Result<Kernel, KernelError> {
    let text = fs::read_to_string(path).map_err(|source| KernelError::Io {
        path: path.to_owned(),
        source,
    })?;
    kernel_from_text(&text)
}

pub fn kernel_from_text(text: &str) -> Result<Kernel, KernelError> {
    match parse_kernel(text)? {
        (LoadMode::Replace, kernel) => Ok(kernel),
        (LoadMode::Extend, extension) => {
            let mut kernel = load_standard_kernel()?;
            kernel.extend(extension)?;
            Ok(kernel)
        }
    }
}

/// Picks the kernel for a run: an explicit path wins, then
/// `$ESSENCERY_KERNEL`, then the standard kernel.
pub fn load_configured_kernel(explicit: Option<&Path>) -> Result<Kernel, KernelError> {
    if let Some(path) = explicit {
        return load_kernel(path);
    }
    match std::env::var_os(KERNEL_ENV) {
        Some(path) if !path.is_empty() => load_kernel(Path::new(&path)),
        _ => load_standard_kernel(),
    }
}

pub fn parse_kernel(text: &str) -> Result<(LoadMode, Kernel), ParseError> {
    let mut ts = TokenStream::new(text);
    let mode = if ts.peek_is_keyword("extend")? {
        ts.next()?;
        LoadMode::Extend
    } else {
        LoadMode::Replace
    };
    ts.keyword("kernel")?;
    let (title, _) = ts.string()?;
    ts.expect(Token::LBrace)?;

    let mut kernel = Kernel {
        title,
        areas: Vec::new(),
        alphas: Vec::new(),
        spaces: Vec::new(),
        competencies: Vec::new(),
    };
    let mut seen: HashSet<(KernelCategory, String)> = HashSet::new();

    loop {
        let tok = ts.next()?;
        match &tok.token {
            Token::RBrace => break,
            Token::Ident(kw) if kw == "area" => parse_area(&mut ts, &mut kernel, &mut seen)?,
            _ => return Err(unexpected(&tok, "`area` or `}`")),
        }
    }
    let tok = ts.next()?;
    if tok.token != Token::Eof {
        return Err(unexpected(&tok, "end of input"));
    }
    Ok((mode, kernel))
}

fn parse_area(
    ts: &mut TokenStream<'_>,
    kernel: &mut Kernel,
    seen: &mut HashSet<(KernelCategory, String)>,
) -> Result<(), ParseError> {
    let (key, key_pos) = ts.ident("area key")?;
    let key: AreaKey = key
        .parse()
        .map_err(|e: String| ParseError::expected(key_pos, e, "customer, solution or endeavor"))?;
    if kernel.areas.iter().any(|a| a.key == key) {
        return Err(ParseError::new(
            key_pos,
            format!("area `{key}` declared twice"),
        ));
    }
    let (display_name, _) = ts.string()?;
    ts.keyword("color")?;
    let (color, color_pos) = ts.ident("color token")?;
    let color = color
        .parse()
        .map_err(|e: String| ParseError::new(color_pos, e))?;
    kernel.areas.push(AreaOfConcern {
        key,
        display_name,
        color,
    });
    ts.expect(Token::LBrace)?;

    loop {
        let tok = ts.next()?;
        let category = match &tok.token {
            Token::RBrace => return Ok(()),
            Token::Ident(kw) => match kw.parse::<KernelCategory>() {
                Ok(c) => c,
                Err(_) => return Err(unexpected(&tok, "`alpha`, `space`, `competency` or `}`")),
            },
            _ => return Err(unexpected(&tok, "`alpha`, `space`, `competency` or `}`")),
        };
        let (name, name_pos) = ts.ident("element name")?;
        if !seen.insert((category, name.clone())) {
            return Err(ParseError::new(
                name_pos,
                format!("duplicate kernel element kernel.{category}.{name}"),
            ));
        }
        match category {
            KernelCategory::Alpha => {
                ts.expect(Token::LBrace)?;
                let states = parse_string_list(ts, "state")?;
                if states.is_empty() {
                    return Err(ParseError::new(
                        name_pos,
                        format!("alpha {name} must declare at least one state"),
                    ));
                }
                kernel.alphas.push(KernelAlpha {
                    name,
                    area: key,
                    states,
                });
            }
            KernelCategory::Space => kernel.spaces.push(KernelSpace { name, area: key }),
            KernelCategory::Competency => {
                let levels = if ts.peek()?.token == Token::LBrace {
                    ts.next()?;
                    parse_string_list(ts, "level")?
                } else {
                    Vec::new()
                };
                kernel.competencies.push(KernelCompetency {
                    name,
                    area: key,
                    levels,
                });
            }
        }
    }
}

/// `(<kw> STRING)* '}'` with duplicates rejected.
fn parse_string_list(ts: &mut TokenStream<'_>, kw: &str) -> Result<Vec<String>, ParseError> {
    let mut out: Vec<String> = Vec::new();
    loop {
        let tok = ts.next()?;
        match &tok.token {
            Token::RBrace => return Ok(out),
            Token::Ident(k) if k == kw => {
                let (value, pos) = ts.string()?;
                if out.contains(&value) {
                    return Err(ParseError::new(
                        pos,
                        format!("duplicate {kw} {}", quote(&value)),
                    ));
                }
                out.push(value);
            }
            _ => return Err(unexpected(&tok, &format!("`{kw}` or `}}`"))),
        }
    }
}

/// Canonical text form; `parse_kernel` of the result yields an equal kernel.
pub fn print_kernel(kernel: &Kernel) -> String {
    let mut out = format!("kernel {} {{\n", quote(&kernel.title));
    for area in &kernel.areas {
        out.push_str(&format!(
            "  area {} {} color {} {{\n",
            area.key,
            quote(&area.display_name),
            area.color.as_str()
        ));
        for alpha in kernel.alphas.iter().filter(|a| a.area == area.key) {
            out.push_str(&format!("    alpha {} {{\n", alpha.name));
            for s in &alpha.states {
                out.push_str(&format!("      state {}\n", quote(s)));
            }
            out.push_str("    }\n");
        }
        for space in kernel.spaces.iter().filter(|s| s.area == area.key) {
            out.push_str(&format!("    space {}\n", space.name));
        }
        for comp in kernel.competencies.iter().filter(|c| c.area == area.key) {
            if comp.levels.is_empty() {
                out.push_str(&format!("    competency {}\n", comp.name));
            } else {
                out.push_str(&format!("    competency {} {{\n", comp.name));
                for l in &comp.levels {
                    out.push_str(&format!("      level {}\n", quote(l)));
                }
                out.push_str("    }\n");
            }
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
