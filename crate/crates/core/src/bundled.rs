//! Scenario files shipped with the crate.

use crate::error::{Error, Result};
use crate::scenario::ScenarioFile;

const FILES: [(&str, &str); 4] = [
    ("example1", include_str!("../scenarios/example1.json")),
    ("example2", include_str!("../scenarios/example2.json")),
    ("example3", include_str!("../scenarios/example3.json")),
    ("space", include_str!("../scenarios/space.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FILES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn scenario_file(name: &str) -> Result<ScenarioFile> {
    let text = source(name)
        .ok_or_else(|| Error::Configuration(format!("no bundled scenario named `{name}`")))?;
    ScenarioFile::from_json(text)
}
