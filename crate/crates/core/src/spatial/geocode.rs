use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::geo::GeoPoint;

/// Trims, lowercases and collapses internal whitespace.
pub fn normalize_location(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Reads `location,lat,lon` rows (header required). Names are normalized.
pub fn read_point_csv<R: Read>(reader: R) -> io::Result<Vec<(String, GeoPoint)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| invalid(e.to_string()))?;
        let bad = || invalid(format!("row {}: expected location,lat,lon", i + 2));
        if row.len() < 3 {
            return Err(bad());
        }
        let lat: f64 = row[1].trim().parse().map_err(|_| bad())?;
        let lon: f64 = row[2].trim().parse().map_err(|_| bad())?;
        let point = GeoPoint::new(lat, lon).map_err(|e| invalid(e.to_string()))?;
        out.push((normalize_location(&row[0]), point));
    }
    Ok(out)
}

fn write_point_row<W: Write>(w: W, name: &str, p: GeoPoint) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record([name, &p.lat().to_string(), &p.lon().to_string()])
        .map_err(|e| invalid(e.to_string()))?;
    wtr.flush()
}

/// Local lookup table of normalized location names.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: BTreeMap<String, GeoPoint>,
}

impl Gazetteer {
    pub fn from_entries<I: IntoIterator<Item = (String, GeoPoint)>>(entries: I) -> Self {
        Self {
            entries: entries
                .into_iter()
                .map(|(k, v)| (normalize_location(&k), v))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Self::from_entries(read_point_csv(BufReader::new(
            File::open(path)?,
        ))?))
    }

    pub fn get(&self, location: &str) -> Option<GeoPoint> {
        self.entries.get(&normalize_location(location)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Persistent cache of resolved locations, backed by an append-only CSV file
/// in the gazetteer format.
#[derive(Debug, Default)]
pub struct GeocodeCache {
    entries: HashMap<String, GeoPoint>,
    path: Option<PathBuf>,
}

impl GeocodeCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists; later inserts are appended to it.
    pub fn open(path: &Path) -> io::Result<Self> {
        let entries = if path.exists() {
            read_point_csv(BufReader::new(File::open(path)?))?
                .into_iter()
                .collect()
        } else {
            HashMap::new()
        };
        Ok(Self {
            entries,
            path: Some(path.to_owned()),
        })
    }

    pub fn get(&self, location: &str) -> Option<GeoPoint> {
        self.entries.get(&normalize_location(location)).copied()
    }

    pub fn insert(&mut self, location: &str, point: GeoPoint) -> io::Result<()> {
        let key = normalize_location(location);
        if let Some(path) = &self.path {
            let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            if fresh {
                f.write_all(b"location,lat,lon\n")?;
            }
            write_point_row(&mut f, &key, point)?;
        }
        self.entries.insert(key, point);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Remote geocoding service. `Ok(None)` means the service has no match.
pub trait GeocoderClient {
    fn resolve(&self, location: &str) -> Result<Option<GeoPoint>, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeocodeSource {
    Cache,
    Gazetteer,
    Client,
    Unresolved,
}

/// Lookup chain: cache, then gazetteer, then the optional client, whose
/// answers are written back to the cache.
pub struct Geocoder {
    cache: GeocodeCache,
    gazetteer: Gazetteer,
    client: Option<Box<dyn GeocoderClient + Send + Sync>>,
}

impl Geocoder {
    pub fn new(gazetteer: Gazetteer, cache: GeocodeCache) -> Self {
        Self {
            cache,
            gazetteer,
            client: None,
        }
    }

    pub fn with_client(mut self, client: Box<dyn GeocoderClient + Send + Sync>) -> Self {
        self.client = Some(client);
        self
    }

    pub fn cache(&self) -> &GeocodeCache {
        &self.cache
    }

    pub fn geocode(&mut self, location: &str) -> Option<GeoPoint> {
        self.resolve(location).0
    }

    pub fn resolve(&mut self, location: &str) -> (Option<GeoPoint>, GeocodeSource) {
        if let Some(p) = self.cache.get(location) {
            return (Some(p), GeocodeSource::Cache);
        }
        if let Some(p) = self.gazetteer.get(location) {
            return (Some(p), GeocodeSource::Gazetteer);
        }
        let Some(client) = &self.client else {
            return (None, GeocodeSource::Unresolved);
        };
        match client.resolve(location) {
            Ok(Some(p)) => {
                if let Err(e) = self.cache.insert(location, p) {
                    log::warn!("could not persist geocode for `{location}`: {e}");
                }
                (Some(p), GeocodeSource::Client)
            }
            Ok(None) => (None, GeocodeSource::Unresolved),
            Err(e) => {
                log::warn!("geocoder failed for `{location}`: {e}");
                (None, GeocodeSource::Unresolved)
            }
        }
    }
}
