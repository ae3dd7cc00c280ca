//! Complex flag values written as `a+bi` or `a-bi`.

use fspair::Complex64;

/// Parses `a+bi` / `a-bi`. Both parts are required and whitespace is refused.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    if text.chars().any(char::is_whitespace) {
        return Err(format!("`{text}`: whitespace is not allowed in a complex value"));
    }
    let body = text
        .strip_suffix('i')
        .ok_or_else(|| format!("`{text}`: expected the form a+bi or a-bi"))?;
    // the sign joining the parts is the last one not opening the string or an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| matches!(bytes[j], b'+' | b'-') && !matches!(bytes[j - 1], b'e' | b'E'))
        .ok_or_else(|| format!("`{text}`: expected the form a+bi or a-bi"))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|_| format!("`{text}`: bad real part `{}`", &body[..split]))?;
    let im_text = &body[split..];
    let im: f64 = im_text
        .parse()
        .map_err(|_| format!("`{text}`: bad imaginary part `{im_text}`"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err(format!("`{text}`: parts must be finite"));
    }
    Ok(Complex64::new(re, im))
}
