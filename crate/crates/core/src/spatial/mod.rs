//! Location-level communication analysis: ranked profile locations,
//! geocoding, great-circle distances, location-pair frequency and median
//! response-time matrices, distance-decay curves and surrogate edge widths.

mod geo;
mod geocode;
mod locations;
mod matrix;

pub use geo::{haversine, haversine_with_radius, GeoError, GeoPoint, EARTH_RADIUS_M};
pub use geocode::{
    normalize_location, read_point_csv, Gazetteer, GeocodeCache, GeocodeSource, Geocoder,
    GeocoderClient,
};
pub use locations::{top_locations, user_locations, LocationStats, TopLocations, DEFAULT_TOP_K};
pub use matrix::{
    decay_curve, frequency_matrix, response_times, surrogate_model, DecayBin, DecayCurve,
    DistanceBins, MatrixKind, PairMatrix, ResponseTimes, SurrogateEdge, CITY_MARK_M, STATE_MARK_M,
};
