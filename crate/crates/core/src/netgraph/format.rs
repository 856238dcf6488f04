// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Arrow, Network, Node};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`Network`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<Node>,
    pub arrows: Vec<Arrow>,
}

impl Network {
    pub fn to_doc(&self) -> NetworkDoc {
        NetworkDoc {
            version: FORMAT_VERSION,
            name: Some(self.name().to_string()),
            nodes: self.nodes().to_vec(),
            arrows: self.arrows().to_vec(),
        }
    }

    pub fn from_doc(doc: NetworkDoc) -> Result<Self> {
        if doc.version != FORMAT_VERSION {
            return Err(Error::InvalidNetwork(format!(
                "unsupported network format version {}",
                doc.version
            )));
        }
        Network::new(doc.name.unwrap_or_else(|| "network".into()), doc.nodes, doc.arrows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("network serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Network::from_doc(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Network::from_json(&std::fs::read_to_string(path)?)
    }
}
