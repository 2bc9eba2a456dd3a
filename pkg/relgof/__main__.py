from relgof.cli import main

raise SystemExit(main())
