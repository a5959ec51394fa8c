//! Gmsh MSH 2.2 ASCII reader.

use super::{MeshError, RawMesh, Result};
use crate::Vec3;
use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

const TETRAHEDRON: u32 = 4;
const TRIANGLE: u32 = 2;

/// Result of reading an MSH file.
#[derive(Debug, Clone)]
pub struct MshImport {
    pub mesh: RawMesh,
    /// Count of skipped elements per gmsh element type.
    pub ignored: BTreeMap<u32, usize>,
}

impl MshImport {
    pub fn ignored_total(&self) -> usize {
        self.ignored.values().sum()
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        loop {
            match self.inner.next() {
                None => return Ok(None),
                Some(line) => {
                    self.number += 1;
                    let line = line?;
                    let trimmed = line.trim();
                    if !trimmed.is_empty() {
                        return Ok(Some(trimmed.to_string()));
                    }
                }
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?.ok_or_else(|| MeshError::Msh {
            line: self.number + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn error(&self, message: impl Into<String>) -> MeshError {
        MeshError::Msh {
            line: self.number,
            message: message.into(),
        }
    }

    fn count(&mut self, section: &str) -> Result<usize> {
        let line = self.expect_line(&format!("{section} count"))?;
        line.parse()
            .map_err(|_| self.error(format!("invalid {section} count '{line}'")))
    }

    fn expect_end(&mut self, section: &str) -> Result<()> {
        let end = format!("$End{section}");
        let line = self.expect_line(&end)?;
        if line != end {
            return Err(self.error(format!("expected {end}, found '{line}'")));
        }
        Ok(())
    }
}

pub fn read_msh_file(path: impl AsRef<Path>) -> Result<MshImport> {
    let file = std::fs::File::open(path)?;
    read_msh(std::io::BufReader::new(file))
}

/// Reads tetrahedra (element type 4) and boundary triangles from an MSH 2.2
/// ASCII stream. The first tag of each element is its physical region.
pub fn read_msh<R: BufRead>(reader: R) -> Result<MshImport> {
    let mut lines = Lines {
        inner: reader.lines(),
        number: 0,
    };
    let mut seen_format = false;
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut tets = Vec::new();
    let mut region_tag = Vec::new();
    let mut triangles = Vec::new();
    let mut ignored = BTreeMap::new();

    while let Some(header) = lines.next_line()? {
        match header.as_str() {
            "$MeshFormat" => {
                let line = lines.expect_line("format line")?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < 3 {
                    return Err(lines.error(format!("malformed format line '{line}'")));
                }
                if !fields[0].starts_with("2.") {
                    return Err(lines.error(format!("unsupported msh version {}", fields[0])));
                }
                if fields[1] != "0" {
                    return Err(MeshError::UnsupportedBinary);
                }
                lines.expect_end("MeshFormat")?;
                seen_format = true;
            }
            "$Nodes" => {
                let n = lines.count("node")?;
                nodes.reserve(n);
                for _ in 0..n {
                    let line = lines.expect_line("node record")?;
                    let v: Vec<&str> = line.split_whitespace().collect();
                    if v.len() < 4 {
                        return Err(lines.error(format!("malformed node record '{line}'")));
                    }
                    let id: usize = v[0].parse().map_err(|_| lines.error("invalid node id"))?;
                    let mut c = [0.0; 3];
                    for a in 0..3 {
                        c[a] = v[a + 1]
                            .parse()
                            .map_err(|_| lines.error(format!("invalid coordinate '{}'", v[a + 1])))?;
                    }
                    node_ids.insert(id, nodes.len());
                    nodes.push(Vec3::new(c[0], c[1], c[2]));
                }
                lines.expect_end("Nodes")?;
            }
            "$Elements" => {
                let n = lines.count("element")?;
                for _ in 0..n {
                    let line = lines.expect_line("element record")?;
                    let v: Vec<usize> = line
                        .split_whitespace()
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| lines.error(format!("malformed element record '{line}'")))?;
                    if v.len() < 3 || v.len() < 3 + v[2] {
                        return Err(lines.error(format!("malformed element record '{line}'")));
                    }
                    let kind = v[1] as u32;
                    let ntags = v[2];
                    let tag = if ntags > 0 { v[3] as i32 } else { 0 };
                    let conn = &v[3 + ntags..];
                    let lookup = |id: usize| {
                        node_ids
                            .get(&id)
                            .copied()
                            .ok_or_else(|| lines.error(format!("element references unknown node {id}")))
                    };
                    match kind {
                        TETRAHEDRON => {
                            if conn.len() != 4 {
                                return Err(lines.error("tetrahedron needs 4 nodes"));
                            }
                            tets.push([lookup(conn[0])?, lookup(conn[1])?, lookup(conn[2])?, lookup(conn[3])?]);
                            region_tag.push(tag);
                        }
                        other => {
                            if other == TRIANGLE && conn.len() == 3 {
                                let mut key = [lookup(conn[0])?, lookup(conn[1])?, lookup(conn[2])?];
                                key.sort_unstable();
                                triangles.push((key, tag));
                            }
                            *ignored.entry(other).or_insert(0) += 1;
                        }
                    }
                }
                lines.expect_end("Elements")?;
            }
            section if section.starts_with('$') && !section.starts_with("$End") => {
                // Skip unknown sections such as $PhysicalNames.
                let name = &section[1..];
                let end = format!("$End{name}");
                loop {
                    match lines.next_line()? {
                        Some(l) if l == end => break,
                        Some(_) => continue,
                        None => return Err(lines.error(format!("unterminated section {section}"))),
                    }
                }
            }
            other => return Err(lines.error(format!("unexpected line '{other}'"))),
        }
    }

    if !seen_format {
        return Err(MeshError::Msh {
            line: 1,
            message: "missing $MeshFormat section".into(),
        });
    }
    if tets.is_empty() {
        return Err(MeshError::NoTetrahedra);
    }
    Ok(MshImport {
        mesh: RawMesh {
            nodes,
            tets,
            region_tag,
            boundary_markers: triangles,
        },
        ignored,
    })
}
