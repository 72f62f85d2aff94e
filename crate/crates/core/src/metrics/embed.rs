//! Token embedders behind [`Embedder`]: two deterministic stubs for tests
//! and a remote embedding service for real evaluation.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::MetricsError;

/// Maps tokens to unit-norm vectors, one per input token.
pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricsError>;
}

/// One-hot vectors keyed by token identity. Cosine between two embeddings is
/// exactly 1 for equal tokens and 0 otherwise, which reduces BERTScore to
/// token overlap and makes scores hand-checkable.
pub struct OneHotEmbedder {
    dim: usize,
    vocab: Mutex<HashMap<String, usize>>,
}

impl OneHotEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim, vocab: Mutex::new(HashMap::new()) }
    }

    fn index_of(&self, token: &str) -> Result<usize, MetricsError> {
        let mut vocab = self.vocab.lock().expect("vocab lock");
        if let Some(&i) = vocab.get(token) {
            return Ok(i);
        }
        let next = vocab.len();
        if next >= self.dim {
            return Err(MetricsError::VocabOverflow { dim: self.dim });
        }
        vocab.insert(token.to_string(), next);
        Ok(next)
    }
}

impl Default for OneHotEmbedder {
    fn default() -> Self {
        Self::new(4096)
    }
}

impl Embedder for OneHotEmbedder {
    fn id(&self) -> &str {
        "one_hot"
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricsError> {
        tokens
            .iter()
            .map(|t| {
                let mut v = vec![0.0; self.dim];
                v[self.index_of(t)?] = 1.0;
                Ok(v)
            })
            .collect()
    }
}

/// Seeded random unit vectors per token. Larger-vocab stand-in when one-hot
/// dimensions would overflow; identical tokens always map to identical
/// vectors across runs and machines.
pub struct HashedProjectionEmbedder {
    dim: usize,
    seed: u64,
    id: String,
}

impl HashedProjectionEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed, id: format!("hashed_projection_d{dim}_s{seed}") }
    }
}

impl Default for HashedProjectionEmbedder {
    fn default() -> Self {
        Self::new(64, 0x5eed)
    }
}

impl Embedder for HashedProjectionEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricsError> {
        Ok(tokens
            .iter()
            .map(|t| {
                let digest = Sha256::digest(t.as_bytes());
                let token_seed = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
                let mut rng = ChaCha8Rng::seed_from_u64(token_seed ^ self.seed);
                let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    for x in &mut v {
                        *x /= norm;
                    }
                } else {
                    v[0] = 1.0;
                }
                v
            })
            .collect())
    }
}

/// Remote embedding service speaking `{"model", "input": [tokens]}` →
/// `{"data": [{"embedding": [...]}, ...]}`. Vectors are re-normalized to
/// unit length on receipt.
pub struct RemoteEmbedder {
    endpoint: String,
    model_id: String,
    auth_env: String,
    client: reqwest::blocking::Client,
    id: String,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>, auth_env: impl Into<String>) -> Result<Self, MetricsError> {
        let endpoint = endpoint.into();
        let model_id = model_id.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| MetricsError::Remote(e.to_string()))?;
        let id = format!("remote:{model_id}");
        Ok(Self { endpoint, model_id, auth_env: auth_env.into(), client, id })
    }
}

impl Embedder for RemoteEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, MetricsError> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let payload = serde_json::json!({ "model": self.model_id, "input": tokens });
        let mut request = self.client.post(&self.endpoint).json(&payload);
        if !self.auth_env.is_empty() {
            if let Ok(token) = std::env::var(&self.auth_env) {
                request = request.bearer_auth(token);
            }
        }
        let resp = request.send().map_err(|e| MetricsError::Remote(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(MetricsError::Remote(format!("http_status({})", resp.status().as_u16())));
        }
        let value: serde_json::Value = resp.json().map_err(|e| MetricsError::Remote(e.to_string()))?;
        let data = value["data"]
            .as_array()
            .ok_or_else(|| MetricsError::Remote("missing data array".into()))?;
        if data.len() != tokens.len() {
            return Err(MetricsError::WrongEmbeddingCount { expected: tokens.len(), got: data.len() });
        }
        data.iter()
            .map(|entry| {
                let raw = entry["embedding"]
                    .as_array()
                    .ok_or_else(|| MetricsError::Remote("missing embedding".into()))?;
                let mut v: Vec<f64> = raw.iter().map(|x| x.as_f64().unwrap_or(0.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    for x in &mut v {
                        *x /= norm;
                    }
                }
                Ok(v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_hot_is_unit_norm_and_identity_keyed() {
        let embedder = OneHotEmbedder::new(16);
        let vectors = embedder.embed(&toks(&["a", "b", "a"])).unwrap();
        assert_eq!(vectors.len(), 3);
        assert_eq!(vectors[0], vectors[2]);
        assert_ne!(vectors[0], vectors[1]);
        for v in &vectors {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn one_hot_overflows_loudly() {
        let embedder = OneHotEmbedder::new(2);
        let err = embedder.embed(&toks(&["a", "b", "c"])).unwrap_err();
        assert!(matches!(err, MetricsError::VocabOverflow { dim: 2 }));
    }

    #[test]
    fn hashed_projection_is_deterministic() {
        let a = HashedProjectionEmbedder::new(32, 7);
        let b = HashedProjectionEmbedder::new(32, 7);
        assert_eq!(a.embed(&toks(&["x", "y"])).unwrap(), b.embed(&toks(&["x", "y"])).unwrap());
        for v in a.embed(&toks(&["token"])).unwrap() {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hashed_projection_varies_with_seed() {
        let a = HashedProjectionEmbedder::new(32, 1);
        let b = HashedProjectionEmbedder::new(32, 2);
        assert_ne!(a.embed(&toks(&["x"])).unwrap(), b.embed(&toks(&["x"])).unwrap());
    }

    #[test]
    fn remote_embedder_parses_service_response() {
        use std::io::{BufRead, BufReader, Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut content_length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                if let Some(rest) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = rest.trim().parse().unwrap_or(0);
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0u8; content_length];
            let _ = reader.read_exact(&mut body);
            let payload = r#"{"data":[{"embedding":[3.0,4.0]},{"embedding":[0.0,2.0]}]}"#;
            let response = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = stream.write_all(response.as_bytes());
        });

        let embedder = RemoteEmbedder::new(format!("http://{addr}/embed"), "emb-model", "").unwrap();
        let vectors = embedder.embed(&toks(&["a", "b"])).unwrap();
        assert_eq!(vectors.len(), 2);
        // 3-4-5 triangle normalized
        assert!((vectors[0][0] - 0.6).abs() < 1e-9);
        assert!((vectors[0][1] - 0.8).abs() < 1e-9);
        assert!((vectors[1][1] - 1.0).abs() < 1e-9);
    }
}
