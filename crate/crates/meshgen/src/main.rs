//! Writes the bundled meshes: `fraqmap-meshgen [OUT_DIR]` (default `data/meshes`).

use std::path::PathBuf;

use fraqmap_meshgen::{hexagon8, interval, square_grid, square_in_disk, MeshData};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/meshes".into()));
    std::fs::create_dir_all(&dir)?;
    let meshes: [(&str, MeshData); 7] = [
        ("interval_6.mesh", interval(0.5, 1.5, 2, 2)),
        ("interval_60.mesh", interval(0.5, 1.5, 20, 20)),
        ("hexagon_8.mesh", hexagon8()),
        ("square_grid_11.mesh", square_grid(0.5, 11)),
        ("square_disk_h0.1.mesh", square_in_disk(0.5, 1.5, 10, 5)),
        ("square_disk_h0.05.mesh", square_in_disk(0.5, 1.5, 20, 8)),
        ("square_disk_h0.025.mesh", square_in_disk(0.5, 1.5, 40, 12)),
    ];
    for (name, mesh) in meshes {
        let path = dir.join(name);
        std::fs::write(&path, mesh.to_mesh_text())?;
        println!("{} ({} nodes, {} cells)", path.display(), mesh.vertices.len(), mesh.cells.len());
    }
    Ok(())
}
