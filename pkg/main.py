"""
blindspot 명령행 진입점

    blindspot run roof-vs-grille --seed 7 --threads 8
    blindspot compare out/grille/report.json out/roof/report.json
    blindspot render out/ground_detection_probability.csv --style probability

하위 명령은 apps.scenarios의 Django 관리 명령이다 (migrate 등도 그대로 쓸 수 있다).
"""

import os
import sys


def main(argv=None):
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    from django.core.management import execute_from_command_line

    argv = list(sys.argv if argv is None else argv)
    execute_from_command_line(["blindspot", *argv[1:]])


if __name__ == "__main__":
    main()
