//! The 6x4 face grid, the bundled region layout and a custom one.

use facedeform::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(640, 480, 6, 4)?;
    for r in 0..grid.rows() {
        let cells: Vec<String> = (0..grid.cols())
            .map(|c| format!("{:?}x{:?}", grid.col_range(c), grid.row_range(r)))
            .collect();
        println!("row {r}: {}", cells.join("  "));
    }

    let map = RegionMap::default_layout();
    print!("bundled layout:\n{map}");
    for name in map.names() {
        println!("{name}: {} pixels", region_mask(&grid, &map, name)?.count());
    }

    let custom = parse_region_map("region brows = r1c0, r1c1, r1c2, r1c3\nregion jaw = r5c1, r5c2\n", 6, 4)?;
    println!("custom: {:?}", custom.names().collect::<Vec<_>>());

    let err = parse_region_map("region a = r0c0\nregion b = r0c0\n", 6, 4).unwrap_err();
    println!("overlap rejected: {err}");
    Ok(())
}
