//! Reading and writing token streams: raw bytes, or whitespace-separated ids.

use clap::ValueEnum;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Bytes,
    Tokens,
}

/// Parse input into tokens and an alphabet size. For id input without
/// `vocab`, the alphabet is the largest id plus one (at least 2).
pub fn read_tokens(raw: &[u8], format: InputFormat, vocab: Option<u32>) -> Result<(Vec<u32>, u32), CliError> {
    let (tokens, natural) = match format {
        InputFormat::Bytes => (raw.iter().map(|&b| b as u32).collect::<Vec<_>>(), 256),
        InputFormat::Tokens => {
            let text = std::str::from_utf8(raw).map_err(|_| CliError::usage("token input is not UTF-8"))?;
            let tokens = text
                .split_whitespace()
                .map(|w| w.parse::<u32>().map_err(|_| CliError::usage(format!("bad token id {w:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let max = tokens.iter().copied().max().unwrap_or(0);
            (tokens, max.saturating_add(1).max(2))
        }
    };
    let vocab = vocab.unwrap_or(natural);
    if let Some(&t) = tokens.iter().find(|&&t| t >= vocab) {
        return Err(CliError::usage(format!("token {t} does not fit alphabet size {vocab}")));
    }
    Ok((tokens, vocab))
}

pub fn write_tokens(tokens: &[u32], format: InputFormat) -> Result<Vec<u8>, CliError> {
    match format {
        InputFormat::Bytes => tokens
            .iter()
            .map(|&t| u8::try_from(t).map_err(|_| CliError::usage(format!("token {t} does not fit in a byte"))))
            .collect(),
        InputFormat::Tokens => {
            let mut s = tokens.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            s.push('\n');
            Ok(s.into_bytes())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_and_size_alphabet() {
        let (t, n) = read_tokens(b"3 0\n17  2", InputFormat::Tokens, None).unwrap();
        assert_eq!((t.clone(), n), (vec![3, 0, 17, 2], 18));
        assert_eq!(write_tokens(&t, InputFormat::Tokens).unwrap(), b"3 0 17 2\n");
        assert!(read_tokens(b"5", InputFormat::Tokens, Some(5)).is_err());
        assert!(read_tokens(b"x", InputFormat::Tokens, None).is_err());
        assert_eq!(read_tokens(b"", InputFormat::Tokens, None).unwrap().1, 2);
        assert!(write_tokens(&[300], InputFormat::Bytes).is_err());
    }
}
