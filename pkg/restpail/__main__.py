"""Allow running as `python -m restpail`."""

from restpail.main import main

raise SystemExit(main())
