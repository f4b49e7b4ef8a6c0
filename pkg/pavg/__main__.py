from pavg.api.cli import main

raise SystemExit(main())
