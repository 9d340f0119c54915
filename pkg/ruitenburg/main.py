import sys

from dotenv import find_dotenv, load_dotenv

from ruitenburg.src.cli import run
from ruitenburg.src.logger_download import logger


def main(argv=None) -> int:
    load_dotenv(find_dotenv())

    code, lines, out = run(argv)
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as stream:
            stream.write(text)
        logger.info(f"Report written to {out}")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
