//! Tree and commit payload encodings, byte-compatible with Git.

use std::fmt::Write as _;

use super::ObjectId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryMode {
    Blob,
    Executable,
    Symlink,
    Tree,
    Submodule,
}

impl EntryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryMode::Blob => "100644",
            EntryMode::Executable => "100755",
            EntryMode::Symlink => "120000",
            EntryMode::Tree => "40000",
            EntryMode::Submodule => "160000",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "100644" => EntryMode::Blob,
            "100755" => EntryMode::Executable,
            "120000" => EntryMode::Symlink,
            "40000" => EntryMode::Tree,
            "160000" => EntryMode::Submodule,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEntry {
    pub mode: EntryMode,
    pub name: String,
    pub id: ObjectId,
}

impl TreeEntry {
    /// Git compares tree entries by name bytes with directories suffixed `/`.
    fn sort_key(&self) -> Vec<u8> {
        let mut key = self.name.as_bytes().to_vec();
        if self.mode == EntryMode::Tree {
            key.push(b'/');
        }
        key
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeRecord {
    entries: Vec<TreeEntry>,
}

impl TreeRecord {
    /// Builds a tree, sorting entries into Git tree order.
    pub fn new(mut entries: Vec<TreeEntry>) -> Self {
        entries.sort_by_key(TreeEntry::sort_key);
        TreeRecord { entries }
    }

    pub fn entries(&self) -> &[TreeEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&TreeEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.extend_from_slice(e.mode.as_str().as_bytes());
            out.push(b' ');
            out.extend_from_slice(e.name.as_bytes());
            out.push(0);
            out.extend_from_slice(e.id.as_bytes());
        }
        out
    }

    pub fn decode(mut payload: &[u8]) -> Result<Self, String> {
        let mut entries = Vec::new();
        while !payload.is_empty() {
            let sp = payload
                .iter()
                .position(|&b| b == b' ')
                .ok_or("tree entry without mode")?;
            let mode = std::str::from_utf8(&payload[..sp]).map_err(|_| "bad mode")?;
            let mode = EntryMode::parse(mode).ok_or_else(|| format!("unknown mode {mode}"))?;
            payload = &payload[sp + 1..];
            let nul = payload
                .iter()
                .position(|&b| b == 0)
                .ok_or("tree entry without name terminator")?;
            let name = std::str::from_utf8(&payload[..nul])
                .map_err(|_| "non UTF-8 entry name")?
                .to_owned();
            payload = &payload[nul + 1..];
            if payload.len() < 20 {
                return Err("truncated tree entry".into());
            }
            let mut id = [0u8; 20];
            id.copy_from_slice(&payload[..20]);
            payload = &payload[20..];
            entries.push(TreeEntry {
                mode,
                name,
                id: ObjectId::from_bytes(id),
            });
        }
        Ok(TreeRecord { entries })
    }
}

/// Name, email, unix seconds and UTC offset in minutes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub name: String,
    pub email: String,
    pub time: i64,
    pub tz_offset_minutes: i32,
}

impl Signature {
    pub fn new(name: impl Into<String>, email: impl Into<String>, time: i64, tz_offset_minutes: i32) -> Self {
        Signature {
            name: name.into(),
            email: email.into(),
            time,
            tz_offset_minutes,
        }
    }

    fn encode(&self, out: &mut String) {
        let sign = if self.tz_offset_minutes < 0 { '-' } else { '+' };
        let tz = self.tz_offset_minutes.unsigned_abs();
        let _ = write!(
            out,
            "{} <{}> {} {sign}{:02}{:02}",
            self.name,
            self.email,
            self.time,
            tz / 60,
            tz % 60
        );
    }

    fn decode(s: &str) -> Result<Self, String> {
        let lt = s.find('<').ok_or("signature without '<'")?;
        let gt = s[lt..].find('>').ok_or("signature without '>'")? + lt;
        let name = s[..lt].trim_end().to_owned();
        let email = s[lt + 1..gt].to_owned();
        let mut rest = s[gt + 1..].split_whitespace();
        let time: i64 = rest
            .next()
            .ok_or("signature without time")?
            .parse()
            .map_err(|_| "bad signature time")?;
        let tz = rest.next().ok_or("signature without timezone")?;
        let (sign, digits) = tz.split_at(1);
        if digits.len() != 4 || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad timezone {tz}"));
        }
        let hours: i32 = digits[..2].parse().map_err(|_| "bad timezone")?;
        let mins: i32 = digits[2..].parse().map_err(|_| "bad timezone")?;
        let magnitude = hours * 60 + mins;
        let tz_offset_minutes = match sign {
            "+" => magnitude,
            "-" => -magnitude,
            _ => return Err(format!("bad timezone {tz}")),
        };
        Ok(Signature {
            name,
            email,
            time,
            tz_offset_minutes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub tree: ObjectId,
    pub parents: Vec<ObjectId>,
    pub author: Signature,
    pub committer: Signature,
    pub message: String,
}

impl CommitRecord {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = String::new();
        let _ = writeln!(out, "tree {}", self.tree);
        for p in &self.parents {
            let _ = writeln!(out, "parent {p}");
        }
        out.push_str("author ");
        self.author.encode(&mut out);
        out.push_str("\ncommitter ");
        self.committer.encode(&mut out);
        out.push_str("\n\n");
        out.push_str(&self.message);
        out.into_bytes()
    }

    /// Decodes a commit payload. Headers other than tree/parent/author/
    /// committer (e.g. `gpgsig`) are skipped.
    pub fn decode(payload: &[u8]) -> Result<Self, String> {
        let text = std::str::from_utf8(payload).map_err(|_| "commit is not UTF-8")?;
        let (headers, message) = text.split_once("\n\n").unwrap_or((text, ""));
        let mut tree = None;
        let mut parents = Vec::new();
        let mut author = None;
        let mut committer = None;
        for line in headers.lines() {
            if line.starts_with(' ') {
                continue;
            }
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "tree" => tree = Some(value.parse().map_err(|_| "bad tree id")?),
                "parent" => parents.push(value.parse().map_err(|_| "bad parent id")?),
                "author" => author = Some(Signature::decode(value)?),
                "committer" => committer = Some(Signature::decode(value)?),
                _ => {}
            }
        }
        Ok(CommitRecord {
            tree: tree.ok_or("commit without tree")?,
            parents,
            author: author.ok_or("commit without author")?,
            committer: committer.ok_or("commit without committer")?,
            message: message.to_owned(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{hash_object, ObjectKind};

    fn id(n: u8) -> ObjectId {
        ObjectId::from_bytes([n; 20])
    }

    #[test]
    fn tree_order_puts_directories_after_prefix_files() {
        let t = TreeRecord::new(vec![
            TreeEntry { mode: EntryMode::Tree, name: "a".into(), id: id(1) },
            TreeEntry { mode: EntryMode::Blob, name: "a.nq".into(), id: id(2) },
            TreeEntry { mode: EntryMode::Blob, name: "a-b".into(), id: id(3) },
        ]);
        let names: Vec<&str> = t.entries().iter().map(|e| e.name.as_str()).collect();
        // "a-" < "a." < "a/"
        assert_eq!(names, ["a-b", "a.nq", "a"]);
    }

    #[test]
    fn tree_round_trip() {
        let t = TreeRecord::new(vec![
            TreeEntry { mode: EntryMode::Blob, name: "x.nq".into(), id: id(7) },
            TreeEntry { mode: EntryMode::Tree, name: "sub".into(), id: id(8) },
        ]);
        assert_eq!(TreeRecord::decode(&t.encode()).unwrap(), t);
    }

    #[test]
    fn single_entry_tree_matches_git() {
        // printf 'hello\n' > a.txt; git add a.txt; git write-tree
        let blob = hash_object(ObjectKind::Blob, b"hello\n");
        let t = TreeRecord::new(vec![TreeEntry {
            mode: EntryMode::Blob,
            name: "a.txt".into(),
            id: blob,
        }]);
        assert_eq!(
            hash_object(ObjectKind::Tree, &t.encode()).to_hex(),
            "2e81171448eb9f2ee3821e3d447aa6b2fe3ddba1"
        );
    }

    #[test]
    fn commit_round_trip_two_parents() {
        let c = CommitRecord {
            tree: id(1),
            parents: vec![id(2), id(3)],
            author: Signature::new("pnaumann", "p@example.org", 1487675007, 60),
            committer: Signature::new("Jane Doe", "j@example.org", 1487675100, -330),
            message: "Source: http://dbpedia.org/data/Leipzig.n3\n\nExample Import\n".into(),
        };
        let enc = c.encode();
        let text = std::str::from_utf8(&enc).unwrap();
        assert!(text.contains("\nauthor pnaumann <p@example.org> 1487675007 +0100\n"));
        assert!(text.contains("\ncommitter Jane Doe <j@example.org> 1487675100 -0530\n"));
        assert_eq!(CommitRecord::decode(&enc).unwrap(), c);
    }

    #[test]
    fn commit_decode_skips_signature_headers() {
        let raw = format!(
            "tree {}\nauthor a <a@x> 1 +0000\ncommitter a <a@x> 1 +0000\ngpgsig -----BEGIN\n line\n -----END\n\nmsg\n",
            id(9)
        );
        let c = CommitRecord::decode(raw.as_bytes()).unwrap();
        assert_eq!(c.message, "msg\n");
        assert!(c.parents.is_empty());
    }

    #[test]
    fn bad_commits_are_rejected() {
        assert!(CommitRecord::decode(b"author a <a@x> 1 +0000\n\nx").is_err());
        assert!(TreeRecord::decode(b"100644 name\0short").is_err());
    }
}
