#!/usr/bin/env python3
"""Fetch a pool of calligraphic / handwriting fonts from the Fontsource npm packages.

Each family is fetched with ``npm pack`` and its latin 400-normal WOFF file is
copied to ``<out>/<family>.woff``.  Families that fail to download are skipped.

    python scripts/fetch_fonts.py --out fonts/
"""
import argparse
import io
import subprocess
import sys
import tarfile
import tempfile
from pathlib import Path

FAMILIES = """
alex-brush allison allura amita annie-use-your-telescope architects-daughter
arizonia babylonica bad-script ballet beau-rivage birthstone bonheur-royale
butterfly-kids calligraffitti caramel carattere caveat caveat-brush
cedarville-cursive charm charmonman cherish clicker-script coming-soon
comforter cookie corinthia courgette covered-by-your-grace crafty-girls
damion dancing-script dawning-of-a-new-day dekko delius dr-sugiyama
eagle-lake engagement ephesis estonia euphoria-script explora felipa
fleur-de-leah fondamento fuggles give-you-glory gloria-hallelujah gochi-hand
grand-hotel great-vibes grey-qo gwendolyn handlee herr-von-muellerhoff
homemade-apple hurricane imperial-script indie-flower ingrid-darling
inspiration island-moments italianno itim just-another-hand
just-me-again-down-here kalam kaushan-script kolker-brush kristi
la-belle-aurore lavishly-yours league-script loved-by-the-king lovers-quarrel
love-light mali marck-script mea-culpa meddon meow-script miss-fajardose
monsieur-la-doulaise montez monte-carlo moon-dance mr-dafoe mr-de-haviland
mrs-saint-delafield mrs-sheppards ms-madi my-soul mynerve neucha niconne
norican nothing-you-could-do ole oooh-baby over-the-rainbow pacifico pangolin
parisienne passions-conflict patrick-hand permanent-marker petit-formal-script
pinyon-script playball praise princess-sofia puppies-play qwigley
qwitcher-grypen reenie-beanie rochester rock-salt rouge-script ruthie sacramento
sassy-frass satisfy schoolbell seaweed-script sedgwick-ave send-flowers
sevillana shadows-into-light shadows-into-light-two short-stack sofia
square-peg sriracha stalemate style-script sue-ellen-francisco
swanky-and-moo-moo tangerine the-nautigal twinkle-star unkempt updock vibur
vujahday-script waiting-for-the-sunrise walter-turncoat waterfall whisper
windsong yellowtail yesteryear zeyada
""".split()


def fetch(family, out_dir, workdir):
    target = out_dir / f"{family}.woff"
    if target.exists():
        return True
    proc = subprocess.run(
        ["npm", "pack", f"@fontsource/{family}", "--silent"],
        cwd=workdir, capture_output=True, text=True, timeout=300,
    )
    if proc.returncode != 0:
        return False
    tgz = Path(workdir) / proc.stdout.strip().splitlines()[-1]
    member = f"package/files/{family}-latin-400-normal.woff"
    with tarfile.open(tgz) as tar:
        try:
            data = tar.extractfile(member).read()
        except KeyError:
            return False
    target.write_bytes(data)
    tgz.unlink()
    return True


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("fonts"))
    parser.add_argument("--limit", type=int, default=None)
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    families = FAMILIES[: args.limit] if args.limit else FAMILIES
    ok = 0
    with tempfile.TemporaryDirectory() as tmp:
        for family in families:
            try:
                good = fetch(family, args.out, tmp)
            except (subprocess.SubprocessError, OSError, tarfile.TarError):
                good = False
            ok += good
            if not good:
                print(f"skipped {family}", file=sys.stderr)
    print(f"{ok} fonts in {args.out}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
