//! Overpass API client for named highway ways inside a bounding box.
//!
//! Responses are converted to the GeoJSON form [`load_geojson`] accepts and
//! the raw payload is cached on disk, keyed by a hash of the bounding box.
//!
//! [`load_geojson`]: super::load_geojson

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use geojson::{Feature, FeatureCollection, Geometry, GeometryValue, JsonObject};
use reqwest::StatusCode;
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{json_location, Error, Result};
use crate::net::{network_error, RetryPolicy};

pub const DEFAULT_ENDPOINT: &str = "https://overpass-api.de/api/interpreter";
pub const ENDPOINT_ENV: &str = "DIPOLAR_OVERPASS_URL";
pub const CACHE_DIR_ENV: &str = "DIPOLAR_CACHE_DIR";

/// WGS84 rectangle in Overpass order: south, west, north, east.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self> {
        let b = BoundingBox {
            south,
            west,
            north,
            east,
        };
        let finite = [south, west, north, east].iter().all(|v| v.is_finite());
        if !finite
            || south.abs() > 90.0
            || north.abs() > 90.0
            || west.abs() > 180.0
            || east.abs() > 180.0
        {
            return Err(Error::InvalidParameter(format!(
                "bounding box out of range: {b}"
            )));
        }
        if south >= north || west >= east {
            return Err(Error::InvalidParameter(format!(
                "bounding box is empty: {b}"
            )));
        }
        Ok(b)
    }

    /// Cache key: hex SHA-256 of the fixed-precision coordinates.
    pub fn cache_key(&self) -> String {
        let digest = Sha256::digest(self.to_string().as_bytes());
        hex::encode(&digest[..12])
    }

    pub fn query(&self) -> String {
        format!(
            "[out:json][timeout:90];way[\"highway\"][\"name\"]({});out geom;",
            self
        )
    }
}

impl std::fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:.7},{:.7},{:.7},{:.7}",
            self.south, self.west, self.north, self.east
        )
    }
}

impl FromStr for BoundingBox {
    type Err = Error;

    /// `south,west,north,east`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("bounding box {s:?}: {e}")))?;
        match parts[..] {
            [south, west, north, east] => BoundingBox::new(south, west, north, east),
            _ => Err(Error::InvalidParameter(format!(
                "bounding box {s:?}: expected south,west,north,east"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OverpassClient {
    pub endpoint_url: String,
    pub cache_dir: Option<PathBuf>,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl Default for OverpassClient {
    fn default() -> Self {
        OverpassClient {
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            cache_dir: None,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(120),
        }
    }
}

impl OverpassClient {
    /// Endpoint and cache directory from the environment, when set.
    pub fn from_env() -> Self {
        let mut client = OverpassClient::default();
        if let Ok(url) = std::env::var(ENDPOINT_ENV) {
            client.endpoint_url = url;
        }
        client.cache_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
        client
    }

    pub fn cache_path(&self, bbox: &BoundingBox) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("overpass-{}.json", bbox.cache_key())))
    }

    /// Named highway ways in `bbox`, as GeoJSON bytes.
    pub fn fetch(&self, bbox: &BoundingBox) -> Result<Vec<u8>> {
        if let Some(path) = self.cache_path(bbox) {
            if path.exists() {
                log::info!("overpass cache hit {}", path.display());
                let raw = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                return overpass_to_geojson(&raw);
            }
        }
        let raw = self.download(bbox)?;
        let geojson = overpass_to_geojson(&raw)?;
        if let Some(path) = self.cache_path(bbox) {
            write_cache(&path, &raw)?;
        }
        Ok(geojson)
    }

    fn download(&self, bbox: &BoundingBox) -> Result<Vec<u8>> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .user_agent(concat!("dipolar/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(network_error)?;
        let query = bbox.query();
        let mut rate_limited = false;
        let result = self.retry.run(|attempt| {
            log::info!(
                "overpass request to {} (attempt {})",
                self.endpoint_url,
                attempt + 1
            );
            let resp = client
                .post(&self.endpoint_url)
                .header("Content-Type", "text/plain; charset=utf-8")
                .body(query.clone())
                .send()
                .map_err(network_error)?;
            let status = resp.status();
            if status == StatusCode::TOO_MANY_REQUESTS || status == StatusCode::GATEWAY_TIMEOUT {
                rate_limited = true;
                return Err(Error::Network {
                    message: format!("rate limited ({status})"),
                    retryable: true,
                });
            }
            rate_limited = false;
            if status.is_server_error() {
                return Err(Error::Network {
                    message: format!("server error {status}"),
                    retryable: true,
                });
            }
            if !status.is_success() {
                return Err(Error::Network {
                    message: format!("request rejected with {status}"),
                    retryable: false,
                });
            }
            resp.bytes().map(|b| b.to_vec()).map_err(network_error)
        });
        match result {
            Err(Error::Network { message, .. }) if rate_limited => Err(Error::Network {
                message: format!(
                    "{message}; giving up after {} attempts",
                    self.retry.max_attempts
                ),
                retryable: false,
            }),
            other => other,
        }
    }
}

fn write_cache(path: &Path, raw: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("json.partial");
    std::fs::write(&tmp, raw).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Fetch with the given endpoint, caching under the environment's cache
/// directory if one is configured.
pub fn fetch_overpass(bbox: &BoundingBox, endpoint_url: &str) -> Result<Vec<u8>> {
    let client = OverpassClient {
        endpoint_url: endpoint_url.to_string(),
        ..OverpassClient::from_env()
    };
    client.fetch(bbox)
}

#[derive(Deserialize)]
struct OverpassResponse {
    elements: Vec<Element>,
}

#[derive(Deserialize)]
struct Element {
    #[serde(rename = "type")]
    kind: String,
    id: i64,
    #[serde(default)]
    tags: serde_json::Map<String, Value>,
    #[serde(default)]
    geometry: Vec<Option<LatLon>>,
}

#[derive(Deserialize)]
struct LatLon {
    lat: f64,
    lon: f64,
}

/// Convert an Overpass `out geom` JSON payload to a GeoJSON
/// FeatureCollection of named LineStrings.
pub fn overpass_to_geojson(raw: &[u8]) -> Result<Vec<u8>> {
    let resp: OverpassResponse = serde_json::from_slice(raw)
        .map_err(|e| Error::parse(format!("overpass response {}", json_location(&e)), e))?;
    let mut features = Vec::new();
    for el in resp.elements {
        if el.kind != "way" {
            continue;
        }
        let Some(name) = el.tags.get("name").cloned() else {
            continue;
        };
        let coords: Vec<[f64; 2]> = el
            .geometry
            .iter()
            .flatten()
            .map(|p| [p.lon, p.lat])
            .collect();
        if coords.len() < 2 {
            continue;
        }
        let mut props = JsonObject::new();
        props.insert("name".into(), name);
        if let Some(h) = el.tags.get("highway") {
            props.insert("highway".into(), h.clone());
        }
        props.insert("@id".into(), Value::String(format!("way/{}", el.id)));
        features.push(Feature {
            geometry: Some(Geometry::new(GeometryValue::new_line_string(coords))),
            properties: Some(props),
            ..Default::default()
        });
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset(
            "no named highway ways in the bounding box".into(),
        ));
    }
    serde_json::to_vec(&FeatureCollection::new(features))
        .map_err(|e| Error::parse("geojson output", e))
}
