//! Tensor and model file formats.
//!
//! Text tensors: line 1 is the order N, line 2 the space-separated extents,
//! and the remaining lines hold the values in colexicographic order,
//! whitespace-separated with free line breaking. The binary twin starts with
//! the magic `DTEN`, then a little-endian u32 order, u32 extents, and the
//! f64 payload.
//!
//! Model files: order, extents, and rank on the first three lines, the
//! weights on the fourth, then each factor as R lines of column values
//! (column-major).

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::kruskal::KruskalModel;
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;

pub const BINARY_MAGIC: &[u8; 4] = b"DTEN";

struct TokenReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    current: Vec<String>,
    cursor: usize,
}

impl<R: BufRead> TokenReader<R> {
    fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            current: Vec::new(),
            cursor: 0,
        }
    }

    fn location(&self) -> (usize, usize) {
        (self.line_no, self.cursor)
    }

    fn next_token(&mut self) -> Result<Option<(String, usize, usize)>> {
        loop {
            if self.cursor < self.current.len() {
                let token = self.current[self.cursor].clone();
                self.cursor += 1;
                return Ok(Some((token, self.line_no, self.cursor)));
            }
            match self.lines.next() {
                None => return Ok(None),
                Some(line) => {
                    let line = line?;
                    self.line_no += 1;
                    self.current = line.split_whitespace().map(str::to_owned).collect();
                    self.cursor = 0;
                }
            }
        }
    }

    fn expect_usize(&mut self, what: &str) -> Result<usize> {
        let (token, line, column) = self.required(what)?;
        token.parse().map_err(|_| Error::Parse {
            line,
            column,
            message: format!("expected {what}, got '{token}'"),
        })
    }

    fn expect_f64(&mut self, what: &str) -> Result<f64> {
        let (token, line, column) = self.required(what)?;
        token.parse().map_err(|_| Error::Parse {
            line,
            column,
            message: format!("expected {what}, got '{token}'"),
        })
    }

    fn required(&mut self, what: &str) -> Result<(String, usize, usize)> {
        match self.next_token()? {
            Some(t) => Ok(t),
            None => {
                let (line, column) = self.location();
                Err(Error::Parse {
                    line: line.max(1),
                    column,
                    message: format!("file ended while reading {what}"),
                })
            }
        }
    }
}

/// Parse the whitespace text tensor format.
pub fn read_tensor_text<R: BufRead>(reader: R) -> Result<DenseTensor> {
    let mut tokens = TokenReader::new(reader);
    let order = tokens.expect_usize("tensor order")?;
    if order == 0 || order > 8 {
        let (line, column) = tokens.location();
        return Err(Error::Parse {
            line,
            column,
            message: format!("tensor order must be in 1..=8, got {order}"),
        });
    }
    let mut extents = Vec::with_capacity(order);
    for _ in 0..order {
        extents.push(tokens.expect_usize("extent")?);
    }
    let count: usize = extents.iter().product();
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        data.push(tokens.expect_f64("tensor value")?);
    }
    if let Some((token, line, column)) = tokens.next_token()? {
        return Err(Error::Parse {
            line,
            column,
            message: format!("unexpected trailing token '{token}'"),
        });
    }
    DenseTensor::new(extents, data)
}

pub fn write_tensor_text<W: Write>(tensor: &DenseTensor, writer: &mut W) -> Result<()> {
    writeln!(writer, "{}", tensor.order())?;
    let extents: Vec<String> = tensor.shape().iter().map(usize::to_string).collect();
    writeln!(writer, "{}", extents.join(" "))?;
    for value in tensor.data() {
        writeln!(writer, "{value:e}")?;
    }
    Ok(())
}

/// Parse the `DTEN` binary tensor format.
pub fn read_tensor_binary<R: Read>(reader: &mut R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "missing DTEN magic".to_string(),
        });
    }
    let mut u32_buf = [0u8; 4];
    reader.read_exact(&mut u32_buf)?;
    let order = u32::from_le_bytes(u32_buf) as usize;
    if order == 0 || order > 8 {
        return Err(Error::Parse {
            line: 1,
            column: 2,
            message: format!("tensor order must be in 1..=8, got {order}"),
        });
    }
    let mut extents = Vec::with_capacity(order);
    for _ in 0..order {
        reader.read_exact(&mut u32_buf)?;
        extents.push(u32::from_le_bytes(u32_buf) as usize);
    }
    let count: usize = extents.iter().product();
    let mut data = Vec::with_capacity(count);
    let mut f64_buf = [0u8; 8];
    for _ in 0..count {
        reader.read_exact(&mut f64_buf)?;
        data.push(f64::from_le_bytes(f64_buf));
    }
    DenseTensor::new(extents, data)
}

pub fn write_tensor_binary<W: Write>(tensor: &DenseTensor, writer: &mut W) -> Result<()> {
    writer.write_all(BINARY_MAGIC)?;
    writer.write_all(&(tensor.order() as u32).to_le_bytes())?;
    for &extent in tensor.shape() {
        writer.write_all(&(extent as u32).to_le_bytes())?;
    }
    for &value in tensor.data() {
        writer.write_all(&value.to_le_bytes())?;
    }
    Ok(())
}

/// Read a tensor file, sniffing the binary magic.
pub fn read_tensor_file(path: &std::path::Path) -> Result<DenseTensor> {
    let bytes = std::fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == BINARY_MAGIC {
        read_tensor_binary(&mut &bytes[..])
    } else {
        read_tensor_text(std::io::BufReader::new(&bytes[..]))
    }
}

pub fn write_model<W: Write>(model: &KruskalModel, writer: &mut W) -> Result<()> {
    writeln!(writer, "{}", model.order())?;
    let extents: Vec<String> = model.shape().iter().map(|e| e.to_string()).collect();
    writeln!(writer, "{}", extents.join(" "))?;
    writeln!(writer, "{}", model.rank())?;
    let weights: Vec<String> = model.weights().iter().map(|w| format!("{w:e}")).collect();
    writeln!(writer, "{}", weights.join(" "))?;
    for factor in model.factors() {
        for r in 0..factor.cols() {
            let column: Vec<String> = factor.col(r).iter().map(|v| format!("{v:e}")).collect();
            writeln!(writer, "{}", column.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R) -> Result<KruskalModel> {
    let mut tokens = TokenReader::new(reader);
    let order = tokens.expect_usize("model order")?;
    let mut extents = Vec::with_capacity(order);
    for _ in 0..order {
        extents.push(tokens.expect_usize("extent")?);
    }
    let rank = tokens.expect_usize("rank")?;
    let mut weights = Vec::with_capacity(rank);
    for _ in 0..rank {
        weights.push(tokens.expect_f64("weight")?);
    }
    let mut factors = Vec::with_capacity(order);
    for &extent in &extents {
        let mut factor = Matrix::zeros(extent, rank);
        for r in 0..rank {
            for i in 0..extent {
                factor.set(i, r, tokens.expect_f64("factor value")?);
            }
        }
        factors.push(factor);
    }
    KruskalModel::new(weights, factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufReader;

    fn sample_tensor() -> DenseTensor {
        DenseTensor::new(vec![2, 3, 2], (1..=12).map(|i| i as f64 * 0.5).collect()).unwrap()
    }

    #[test]
    fn text_round_trip() {
        let tensor = sample_tensor();
        let mut buf = Vec::new();
        write_tensor_text(&tensor, &mut buf).unwrap();
        let back = read_tensor_text(BufReader::new(&buf[..])).unwrap();
        assert_eq!(tensor, back);
    }

    #[test]
    fn binary_round_trip() {
        let tensor = sample_tensor();
        let mut buf = Vec::new();
        write_tensor_binary(&tensor, &mut buf).unwrap();
        let back = read_tensor_binary(&mut &buf[..]).unwrap();
        assert_eq!(tensor, back);
    }

    #[test]
    fn text_parse_reports_location() {
        let text = "3\n2 2 2\n1 2 3 4\n5 oops 7 8\n";
        match read_tensor_text(BufReader::new(text.as_bytes())) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 4);
                assert_eq!(column, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn text_parse_rejects_truncation_and_trailing() {
        let truncated = "2\n2 2\n1 2 3\n";
        assert!(matches!(
            read_tensor_text(BufReader::new(truncated.as_bytes())),
            Err(Error::Parse { .. })
        ));
        let trailing = "2\n2 2\n1 2 3 4 5\n";
        assert!(matches!(
            read_tensor_text(BufReader::new(trailing.as_bytes())),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let bytes = b"NOPE\x01\x00\x00\x00";
        assert!(matches!(
            read_tensor_binary(&mut &bytes[..]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn model_round_trip() {
        let a = Matrix::from_rows(&[&[0.6, 0.0], &[0.8, 1.0]]);
        let b = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 0.5], &[0.0, 0.73]]);
        let model = KruskalModel::new(vec![2.0, -3.5], vec![a, b]).unwrap();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back = read_model(BufReader::new(&buf[..])).unwrap();
        assert_eq!(model, back);
    }
}
