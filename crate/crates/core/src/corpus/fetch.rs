//! Optional live fetch of tracker pages. All tests run on fixtures; this is
//! the only corpus operation that touches the network.

use std::time::Duration;

use super::{CorpusError, RawSource, SourceKind};

/// Fetch one tracker page as a [`RawSource`] with `kind = tracker_html`.
///
/// Retries network-level failures up to `max_retries` extra attempts; HTTP
/// status errors are reported immediately. The returned source uses the URL
/// as a provisional `bug_id`; callers usually overwrite it.
pub fn fetch_source(url: &str, timeout: Duration, max_retries: u32) -> Result<RawSource, CorpusError> {
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return Err(CorpusError::InvalidUrl { url: url.to_string() });
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| CorpusError::Network { url: url.to_string(), msg: e.to_string() })?;

    let mut last_err = None;
    for _ in 0..=max_retries {
        match client.get(url).send() {
            Ok(resp) => {
                let status = resp.status();
                if !status.is_success() {
                    return Err(CorpusError::HttpStatus { status: status.as_u16(), url: url.to_string() });
                }
                let body = resp
                    .bytes()
                    .map_err(|e| CorpusError::Network { url: url.to_string(), msg: e.to_string() })?;
                return Ok(RawSource::new(url, SourceKind::TrackerHtml, body.to_vec(), url));
            }
            Err(e) if e.is_timeout() => {
                last_err = Some(CorpusError::Timeout { url: url.to_string() });
            }
            Err(e) => {
                last_err = Some(CorpusError::Network { url: url.to_string(), msg: e.to_string() });
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}
