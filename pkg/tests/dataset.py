"""Write synthetic records as an on-disk dataset."""
from pathlib import Path

from hbnple.formats import ManifestEntry, write_g2, write_manifest, write_spectrum, \
    write_sweep, write_trace


def write_dataset(root, records, provenance=None):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for r in records:
        files = {}
        stem = f"e{r.id:04d}"
        if r.ple is not None:
            write_spectrum(root / f"{stem}_ple.csv", r.ple, as_wavelength=True)
            files["ple"] = f"{stem}_ple.csv"
        if r.trace is not None:
            write_trace(root / f"{stem}_trace.csv", r.trace)
            files["trace"] = f"{stem}_trace.csv"
        if r.g2 is not None:
            write_g2(root / f"{stem}_g2.csv", r.g2)
            files["g2"] = f"{stem}_g2.csv"
        if r.optimization_traces:
            names = []
            for k, t in enumerate(r.optimization_traces):
                names.append(f"{stem}_opt{k}.csv")
                write_sweep(root / names[-1], t)
            files["opt"] = names
        entries.append(ManifestEntry(r.id, files))
    write_manifest(root, entries, provenance or {"source": "test"})
    return root
