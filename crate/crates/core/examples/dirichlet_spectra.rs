//! Dirichlet eigenvalues of the heat and fractional operators, and the heat
//! kernel evaluated three ways.

use osgoodlab::kernels::{
    dirichlet_kernel_images, dirichlet_kernel_series, frac_dirichlet_spectrum, laplacian_dirichlet_spectrum, Domain,
    Mesh,
};

fn main() -> osgoodlab::Result<()> {
    let mesh = Mesh::new(Domain::Interval01, 129)?;
    let heat = laplacian_dirichlet_spectrum(&mesh, 6)?;
    println!("½Δ on (0,1): first eigenvalues");
    for (n, lam) in heat.eigenvalues().iter().enumerate() {
        let exact = ((n + 1) as f64 * std::f64::consts::PI).powi(2) / 2.0;
        println!("  {n}: {lam:.6}  (closed form {exact:.6})");
    }

    let ball = Mesh::new(Domain::Ball1d, 257)?;
    let b = laplacian_dirichlet_spectrum(&ball, 1)?;
    println!(
        "½Δ on (-1,1): λ1 = {:.6}, π²/8 = {:.6}",
        b.eigenvalues()[0],
        std::f64::consts::PI.powi(2) / 8.0
    );

    for alpha in [0.5, 1.0, 1.5] {
        let f = frac_dirichlet_spectrum(&ball, alpha, 3)?;
        println!("α = {alpha}: {:?}", f.eigenvalues());
    }

    let (t, x, y) = (0.01, 0.3, 0.4);
    println!(
        "p_D(0.01, 0.3, 0.4): series {:.10}, images {:.10}",
        dirichlet_kernel_series(t, x, y, 200)?,
        dirichlet_kernel_images(t, x, y)?
    );
    Ok(())
}
