//! Partition identity and the on-disk database layout.
//!
//! Databases are partitioned by `(d, shape, leader, trump)`; each partition
//! is one file. The directory layout is
//! `<root>/<kind>/<cards>/<trump>/<leader>/<shape-id>.<ext>` with a
//! plain-text manifest per directory listing shape-ids and entry counts.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cards::{Player, Trump};
use crate::shape::Shape;
use crate::{Error, Result};

/// A database partition key. The retrograde distance is implied by the
/// shape's row sums.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    pub shape: Shape,
    pub leader: Player,
    pub trump: Trump,
}

impl Partition {
    pub fn new(shape: Shape, leader: Player, trump: Trump) -> Partition {
        Partition {
            shape,
            leader,
            trump,
        }
    }

    pub fn tricks(&self) -> u8 {
        self.shape.tricks()
    }

    pub fn cards(&self) -> u8 {
        self.shape.cards()
    }

    /// `<cards>/<trump>/<leader>/<shape-id>`, used in paths and messages.
    pub fn id(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.cards(),
            self.trump,
            self.leader.letter(),
            self.shape.id()
        )
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition({})", self.id())
    }
}

/// Which database family a file belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DbKind {
    Retro,
    Setro,
}

impl DbKind {
    pub fn dir(self) -> &'static str {
        match self {
            DbKind::Retro => "retro",
            DbKind::Setro => "setdb",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DbKind::Retro => "rdb",
            DbKind::Setro => "sgdb",
        }
    }
}

/// Filesystem root of a database tree.
#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Store {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn partition_dir(&self, kind: DbKind, partition: &Partition) -> PathBuf {
        self.root
            .join(kind.dir())
            .join(partition.cards().to_string())
            .join(partition.trump.to_string())
            .join(partition.leader.letter().to_string())
    }

    pub fn partition_path(&self, kind: DbKind, partition: &Partition) -> PathBuf {
        self.partition_dir(kind, partition)
            .join(format!("{}.{}", partition.shape.id(), kind.extension()))
    }

    pub fn exists(&self, kind: DbKind, partition: &Partition) -> bool {
        self.partition_path(kind, partition).is_file()
    }

    pub fn read(&self, kind: DbKind, partition: &Partition) -> Result<Vec<u8>> {
        let path = self.partition_path(kind, partition);
        fs::read(&path).map_err(|e| {
            Error::Invalid(format!("cannot read {}: {e}", path.display()))
        })
    }

    /// Write via a temporary file so partial writes never look complete.
    pub fn write(&self, kind: DbKind, partition: &Partition, bytes: &[u8]) -> Result<()> {
        let path = self.partition_path(kind, partition);
        let dir = path.parent().expect("partition paths always have a parent");
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(bytes)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Rewrite the manifest of the directory containing `partition`. Lines
    /// are `<shape-id> <entry-count>`, sorted by shape id.
    pub fn update_manifest(
        &self,
        kind: DbKind,
        partition: &Partition,
        entries: &[(String, u64)],
    ) -> Result<()> {
        let dir = self.partition_dir(kind, partition);
        fs::create_dir_all(&dir)?;
        let mut lines: Vec<String> = entries
            .iter()
            .map(|(id, count)| format!("{id} {count}"))
            .collect();
        lines.sort();
        let body = lines.join("\n") + "\n";
        fs::write(dir.join("manifest.txt"), body)?;
        Ok(())
    }

    pub fn read_manifest(&self, kind: DbKind, partition: &Partition) -> Result<Vec<(String, u64)>> {
        let path = self.partition_dir(kind, partition).join("manifest.txt");
        let body = fs::read_to_string(&path)?;
        parse_manifest(&body)
    }
}

pub fn parse_manifest(body: &str) -> Result<Vec<(String, u64)>> {
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let id = parts.next().unwrap().to_string();
        let count: u64 = parts
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::Format {
                offset: lineno,
                message: format!("bad manifest line `{line}`"),
            })?;
        out.push((id, count));
    }
    Ok(out)
}
