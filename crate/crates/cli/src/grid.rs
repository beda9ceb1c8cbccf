//! Partition-size grid syntax: `a..b`, `a:pow2:b`, or a comma list of either.

pub fn parse_grid(spec: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(format!("empty entry in grid {spec:?}"));
        }
        if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (number(a)?, number(b)?);
            if a > b {
                return Err(format!("descending range {item:?}"));
            }
            out.extend(a..=b);
        } else if let Some((a, b)) = item.split_once(":pow2:") {
            let (a, b) = (number(a)?, number(b)?);
            if a > b {
                return Err(format!("descending range {item:?}"));
            }
            let mut x = a;
            while x <= b {
                out.push(x);
                x *= 2;
            }
        } else {
            out.push(number(item)?);
        }
    }
    Ok(out)
}

fn number(s: &str) -> Result<usize, String> {
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a partition size"))?;
    if n == 0 {
        return Err("partition sizes start at 1".into());
    }
    Ok(n)
}
