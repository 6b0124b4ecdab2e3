from .cli_report import main

raise SystemExit(main())
