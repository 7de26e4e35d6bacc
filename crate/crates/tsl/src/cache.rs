//! Content-addressed disk cache for character sums.
//!
//! Sums dominate runtime, so each computed S_r is stored under a digest of
//! (family, base field, λ̄ orbit, r).  Files are plain text: a header echoing
//! the key followed by the cyclotomic coordinate vector in decimal, so a
//! corrupt or stale entry is detectable and simply treated as a miss.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime};

use num::BigRational;
use sha2::{Digest, Sha256};

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::rational::{rat_from_str, rat_to_string};

/// Environment variable naming the cache directory when no explicit path is
/// configured.
pub const CACHE_DIR_ENV: &str = "TSL_CACHE_DIR";

/// Identifies one exponential sum: S_r for a fixed family over a fixed base
/// field at one closed fiber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumKey {
    /// Digest of the family data (support, coefficients, μ, deformation).
    pub family: String,
    /// Base field as `p^m/c0,c1,...`: the modulus pins the coordinate model.
    pub field: String,
    /// Canonical label of the λ̄ Frobenius orbit.
    pub lambda: String,
    /// Which power sum.
    pub r: u32,
}

impl SumKey {
    fn header(&self) -> String {
        format!(
            "family {}\nfield {}\nlambda {}\nr {}\n",
            self.family, self.field, self.lambda, self.r
        )
    }

    /// Content address: hex digest of the header.
    pub fn digest(&self) -> String {
        hex_digest(self.header().as_bytes())
    }
}

/// Hex-encoded SHA-256, the digest used for all content addressing.
pub fn hex_digest(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// A sum cache rooted at a directory, or disabled (all lookups miss).
#[derive(Debug)]
pub struct SumCache {
    dir: Option<PathBuf>,
    hits: AtomicU64,
    misses: AtomicU64,
}

/// Outcome of a garbage-collection pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcReport {
    pub removed: usize,
    pub kept: usize,
}

impl SumCache {
    /// A cache that stores nothing and always misses.
    pub fn disabled() -> Self {
        SumCache {
            dir: None,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// A cache rooted at `dir`, created if absent.
    pub fn at(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::CacheIo(format!("{}: {e}", dir.display())))?;
        Ok(SumCache {
            dir: Some(dir.to_path_buf()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        })
    }

    /// A cache at `TSL_CACHE_DIR` if that variable is set, else disabled.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) => Self::at(Path::new(&dir)),
            None => Ok(Self::disabled()),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.dir.is_some()
    }

    /// (hits, misses) recorded since construction.
    pub fn stats(&self) -> (u64, u64) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }

    fn path_of(&self, key: &SumKey) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.sum", key.digest())))
    }

    /// Looks up a sum.  Any unreadable, truncated, or mismatched entry is a
    /// miss; correctness never depends on cache contents being intact.
    pub fn get(&self, key: &SumKey, p: u64) -> Option<CyclotomicNumber> {
        let path = self.path_of(key)?;
        let found = fs::read_to_string(&path)
            .ok()
            .and_then(|text| parse_entry(&text, key, p));
        match found {
            Some(v) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(v)
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    /// Stores a sum.  Writes go through a temporary file and a rename so a
    /// concurrent reader never sees a partial entry.
    pub fn put(&self, key: &SumKey, value: &CyclotomicNumber) -> Result<()> {
        let Some(path) = self.path_of(key) else {
            return Ok(());
        };
        let mut text = key.header();
        text.push_str(&format!("p {}\n", value.p));
        for c in &value.coeffs {
            text.push_str(&rat_to_string(c));
            text.push('\n');
        }
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        let io = |e: std::io::Error| Error::CacheIo(format!("{}: {e}", path.display()));
        fs::write(&tmp, text).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(())
    }

    /// Removes entries older than `max_age` along with anything unparseable;
    /// temporary files from interrupted writes are always removed.
    pub fn gc(&self, max_age: Duration) -> Result<GcReport> {
        let Some(dir) = &self.dir else {
            return Ok(GcReport {
                removed: 0,
                kept: 0,
            });
        };
        let io = |e: std::io::Error| Error::CacheIo(format!("{}: {e}", dir.display()));
        let now = SystemTime::now();
        let mut report = GcReport {
            removed: 0,
            kept: 0,
        };
        for entry in fs::read_dir(dir).map_err(io)? {
            let entry = entry.map_err(io)?;
            let path = entry.path();
            if !path.is_file() {
                continue;
            }
            let stale = match entry.metadata().and_then(|m| m.modified()) {
                Ok(t) => now.duration_since(t).map_or(false, |age| age > max_age),
                Err(_) => true,
            };
            let is_entry = path.extension().is_some_and(|e| e == "sum");
            let intact = is_entry
                && fs::read_to_string(&path)
                    .ok()
                    .is_some_and(|text| parse_sum_entry(&text).is_some());
            if stale || !intact {
                fs::remove_file(&path).map_err(io)?;
                report.removed += 1;
            } else {
                report.kept += 1;
            }
        }
        Ok(report)
    }
}

fn parse_entry(text: &str, key: &SumKey, p: u64) -> Option<CyclotomicNumber> {
    if !text.starts_with(&key.header()) {
        return None;
    }
    let value = parse_sum_entry(text)?;
    (value.p == p).then_some(value)
}

/// Parses the value of an on-disk entry without checking the header
/// against a key.  Entries are untrusted input: any malformed line makes
/// the whole entry a miss.
pub fn parse_sum_entry(text: &str) -> Option<CyclotomicNumber> {
    let mut lines = text.lines();
    for prefix in ["family ", "field ", "lambda ", "r "] {
        if !lines.next()?.starts_with(prefix) {
            return None;
        }
    }
    let p: u64 = lines.next()?.strip_prefix("p ")?.parse().ok()?;
    if p < 2 {
        return None;
    }
    let coeffs: Vec<BigRational> = lines
        .map(|l| rat_from_str(l).ok())
        .collect::<Option<_>>()?;
    if coeffs.len() != (p - 1) as usize {
        return None;
    }
    Some(CyclotomicNumber { p, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::CyclotomicNumber;

    fn key(r: u32) -> SumKey {
        SumKey {
            family: "aa11".into(),
            field: "3^1/0,1".into(),
            lambda: "1".into(),
            r,
        }
    }

    #[test]
    fn round_trip_and_stats() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SumCache::at(dir.path()).unwrap();
        let v = CyclotomicNumber::from_zeta_counts(3, &[4, 1, 0]);
        assert!(cache.get(&key(1), 3).is_none());
        cache.put(&key(1), &v).unwrap();
        assert_eq!(cache.get(&key(1), 3), Some(v));
        assert!(cache.get(&key(2), 3).is_none());
        assert_eq!(cache.stats(), (1, 2));
    }

    #[test]
    fn disabled_cache_always_misses() {
        let cache = SumCache::disabled();
        let v = CyclotomicNumber::one(5);
        cache.put(&key(1), &v).unwrap();
        assert!(cache.get(&key(1), 5).is_none());
        assert_eq!(cache.stats(), (0, 0));
    }

    #[test]
    fn corrupt_entries_miss_and_gc_removes_them() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SumCache::at(dir.path()).unwrap();
        let good = CyclotomicNumber::from_zeta_counts(3, &[0, 2, 5]);
        cache.put(&key(1), &good).unwrap();

        let bad_path = dir.path().join(format!("{}.sum", key(2).digest()));
        std::fs::write(&bad_path, "family aa11\nnot a real entry").unwrap();
        assert!(cache.get(&key(2), 3).is_none());

        // A wrong-key read of an intact file is a miss, not a wrong value.
        let moved = dir.path().join(format!("{}.sum", key(3).digest()));
        std::fs::copy(dir.path().join(format!("{}.sum", key(1).digest())), moved).unwrap();
        assert!(cache.get(&key(3), 3).is_none());

        let report = cache.gc(Duration::from_secs(3600)).unwrap();
        assert_eq!(report.removed, 1);
        assert_eq!(report.kept, 2);
        assert_eq!(cache.get(&key(1), 3), Some(good));
    }

    #[test]
    fn gc_by_age_clears_everything_at_zero() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SumCache::at(dir.path()).unwrap();
        cache.put(&key(1), &CyclotomicNumber::one(3)).unwrap();
        cache.put(&key(2), &CyclotomicNumber::zero(3)).unwrap();
        let report = cache.gc(Duration::ZERO).unwrap();
        assert_eq!(report.removed, 2);
        assert_eq!(report.kept, 0);
        assert!(cache.get(&key(1), 3).is_none());
    }
}
