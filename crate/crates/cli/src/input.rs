use std::path::Path;

use futaki_core::poly_core::{catalog_entry, CompleteIntersection, DiagonalField, GroupElement};

use crate::error::{CliError, CliResult};

/// A catalog name such as `conic_p2`, or a path to a variety file.
pub fn load_variety(arg: &str) -> CliResult<CompleteIntersection> {
    if let Some(ci) = catalog_entry(arg) {
        return Ok(ci);
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("`{arg}` is neither a catalog variety nor a readable file: {e}")))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    Ok(CompleteIntersection::parse(&text)?.named(name))
}

/// `diag:…`, `expdiag:…`, `identity`, or a path to a matrix file.
pub fn load_sigma(arg: &str, dim: usize) -> CliResult<GroupElement> {
    let sigma = if arg.trim() == "identity" {
        GroupElement::identity(dim)
    } else if arg.contains(':') && !Path::new(arg).exists() {
        GroupElement::parse_diag_spec(arg)?
    } else {
        let text = std::fs::read_to_string(arg)
            .map_err(|e| CliError::Input(format!("cannot read sigma file `{arg}`: {e}")))?;
        GroupElement::parse_matrix(&text)?
    };
    if sigma.dim() != dim {
        return Err(CliError::Input(format!(
            "sigma is {0}x{0} but the variety lives in {1} homogeneous coordinates",
            sigma.dim(),
            dim
        )));
    }
    Ok(sigma)
}

pub fn parse_field(arg: &str, dim: usize) -> CliResult<DiagonalField> {
    let x = DiagonalField::parse(arg)?;
    if x.dim() != dim {
        return Err(CliError::Input(format!("{} weights given for {dim} coordinates", x.dim())));
    }
    Ok(x)
}

/// `a:b:k` gives `k` evenly spaced points from `a` to `b`; otherwise a comma list.
pub fn parse_grid(arg: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Input(format!("cannot parse parameter grid `{arg}`"));
    let parts: Vec<&str> = arg.split(':').collect();
    let grid: Vec<f64> = if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match k {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
        }
    } else {
        arg.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(parse_grid("0.5, 0").unwrap(), vec![0.5, 0.0]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn sigma_dimension_checked() {
        assert!(load_sigma("diag:1,2", 3).is_err());
        assert_eq!(load_sigma("identity", 3).unwrap().dim(), 3);
    }
}
