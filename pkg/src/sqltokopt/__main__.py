import sys

from sqltokopt.cli import main

sys.exit(main())
