//! PGM (portable graymap) reader and writer, P2 (ASCII) and P5 (binary),
//! maxval <= 255. 16-bit graymaps are rejected.

use super::{io_err, IoError, IoResult};
use crate::matrix::DenseMatrix;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,  // P2
    Binary, // P5
}

pub fn read_pgm(path: &Path) -> IoResult<DenseMatrix> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    let p = || path.display().to_string();

    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos).ok_or_else(|| IoError::Format {
        path: p(),
        message: "truncated header".into(),
    })?;
    let encoding = match magic.as_str() {
        "P2" => PgmEncoding::Ascii,
        "P5" => PgmEncoding::Binary,
        other => {
            return Err(IoError::Format {
                path: p(),
                message: format!("bad magic {other:?}, expected P2 or P5"),
            })
        }
    };
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        let tok = next_token(&bytes, &mut pos).ok_or_else(|| IoError::Format {
            path: p(),
            message: "truncated header".into(),
        })?;
        *slot = tok.parse().map_err(|_| IoError::Format {
            path: p(),
            message: format!("bad header token {tok:?}"),
        })?;
    }
    let (width, height, maxval) = (header[0], header[1], header[2]);
    if width == 0 || height == 0 {
        return Err(IoError::Format {
            path: p(),
            message: "zero image dimension".into(),
        });
    }
    if maxval == 0 || maxval > 255 {
        return Err(IoError::Format {
            path: p(),
            message: format!("maxval {maxval} unsupported (must be 1..=255)"),
        });
    }

    let count = width * height;
    let mut data = Vec::with_capacity(count);
    match encoding {
        PgmEncoding::Ascii => {
            while data.len() < count {
                let tok = next_token(&bytes, &mut pos).ok_or_else(|| IoError::Format {
                    path: p(),
                    message: format!("truncated payload: expected {count} pixels, got {}", data.len()),
                })?;
                let v: usize = tok.parse().map_err(|_| IoError::Format {
                    path: p(),
                    message: format!("bad pixel value {tok:?}"),
                })?;
                if v > maxval {
                    return Err(IoError::Format {
                        path: p(),
                        message: format!("pixel value {v} exceeds maxval {maxval}"),
                    });
                }
                data.push(v as f64);
            }
        }
        PgmEncoding::Binary => {
            // exactly one whitespace byte separates the header from the raster
            pos += 1;
            if bytes.len() < pos + count {
                return Err(IoError::Format {
                    path: p(),
                    message: format!(
                        "truncated payload: expected {count} bytes, got {}",
                        bytes.len().saturating_sub(pos)
                    ),
                });
            }
            for &b in &bytes[pos..pos + count] {
                if b as usize > maxval {
                    return Err(IoError::Format {
                        path: p(),
                        message: format!("pixel value {b} exceeds maxval {maxval}"),
                    });
                }
                data.push(b as f64);
            }
        }
    }
    Ok(DenseMatrix::from_rows_vec(height, width, data)?)
}

/// Writes a matrix of pixel values in [0, 255] as a PGM image with
/// maxval 255. Values are rounded to the nearest integer.
pub fn write_pgm(img: &DenseMatrix, path: &Path, encoding: PgmEncoding) -> IoResult<()> {
    for (i, &v) in img.data().iter().enumerate() {
        if !(0.0..=255.0).contains(&v) {
            return Err(IoError::Format {
                path: path.display().to_string(),
                message: format!("pixel {i} = {v} outside [0, 255]"),
            });
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let (h, wd) = (img.rows(), img.cols());
    match encoding {
        PgmEncoding::Ascii => {
            writeln!(w, "P2\n{wd} {h}\n255").map_err(|e| io_err(path, e))?;
            for i in 0..h {
                let line: Vec<String> = img
                    .row(i)
                    .iter()
                    .map(|&v| format!("{}", v.round() as u8))
                    .collect();
                writeln!(w, "{}", line.join(" ")).map_err(|e| io_err(path, e))?;
            }
        }
        PgmEncoding::Binary => {
            write!(w, "P5\n{wd} {h}\n255\n").map_err(|e| io_err(path, e))?;
            let raster: Vec<u8> = img.data().iter().map(|&v| v.round() as u8).collect();
            w.write_all(&raster).map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Advances past whitespace and `#` comments, returning the next token.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}
