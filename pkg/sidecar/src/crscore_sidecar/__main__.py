"""Run the sidecar: ``python -m crscore_sidecar [--model ID] [--port N]``."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import DEFAULT_MODEL, POOLING_MODES, SidecarConfig


def main() -> None:
    parser = argparse.ArgumentParser(description="sentence-embedding sidecar")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="model id, or test:hashbag-<dim> for the offline stub")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8494)
    parser.add_argument("--batch-limit", type=int, default=256)
    parser.add_argument("--max-text-chars", type=int, default=4000)
    parser.add_argument("--pooling", choices=POOLING_MODES, default="native")
    args = parser.parse_args()

    config = SidecarConfig(
        model_id=args.model, host=args.host, port=args.port,
        batch_limit=args.batch_limit, max_text_chars=args.max_text_chars,
        pooling=args.pooling,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
